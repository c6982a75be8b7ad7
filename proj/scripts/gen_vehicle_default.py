#!/usr/bin/env python3
"""Regenerates data/vehicle_default.cfg (synthetic 3.6 L V6 / 8-speed sedan calibration).

Fuel surface: Willans line f(w, T) = max(F_IDLE, C0 + C1*w + C2*w*T) in g/s with w in rad/s
and T in N*m, sampled on a 12 (speed) x 10 (torque) grid.
"""
import math
import pathlib

RPM = [750, 1000, 1250, 1500, 2000, 2500, 3000, 3500, 4000, 4500, 5500, 6500]
MAX_TORQUE = [220, 260, 290, 315, 340, 355, 360, 360, 355, 345, 320, 280]
TORQUE_AXIS = [0, 40, 80, 120, 160, 200, 240, 280, 320, 360]
C0, C1, C2, F_IDLE = 0.05, 0.0025, 6.2e-5, 0.25

THROTTLE_AXIS = [0.0, 0.25, 0.5, 0.75, 1.0]
UPSHIFT = [
    [3.5, 4.5, 6.0, 8.0, 10.0],
    [6.0, 7.5, 9.5, 12.5, 15.5],
    [8.5, 10.5, 13.0, 17.0, 21.0],
    [11.0, 13.5, 16.5, 21.5, 26.5],
    [13.5, 16.5, 20.0, 26.0, 32.0],
    [17.0, 20.0, 24.0, 31.0, 38.0],
    [20.0, 24.0, 28.5, 36.5, 45.0],
]


def g(v):
    return f"{v:.9g}"


def row(vals):
    return ", ".join(g(v) for v in vals)


def main():
    speeds = [r * 2.0 * math.pi / 60.0 for r in RPM]
    out = []
    out.append("# Default vehicle calibration: synthetic 3.6 L V6, 8-speed automatic, full-size sedan.")
    out.append("# Generated by scripts/gen_vehicle_default.py. SI units throughout (rad/s, N*m, g/s, kg, m).")
    out.append(f"# Fuel surface: max({F_IDLE}, {C0} + {C1}*w + {C2}*w*T).")
    out.append("")
    out.append("[engine]")
    out.append(f"idle_speed = {g(750 * 2 * math.pi / 60)}")
    out.append("inertia = 0.25")
    out.append("motoring_torque = 40, 0.12        # DFCO drag torque c0 + c1*w")
    out.append("idle_governor_gain = 10")
    out.append("cyl_deact_fuel_scale = 0.85")
    out.append("")
    out.append("[engine.torque]")
    out.append(f"speed = {row(speeds)}")
    out.append(f"max_torque = {row(MAX_TORQUE)}")
    out.append("")
    out.append("[engine.fuel]")
    out.append(f"speed = {row(speeds)}")
    out.append(f"torque = {row(TORQUE_AXIS)}")
    out.append("# row-major: one row per speed point")
    for w in speeds:
        vals = [max(F_IDLE, C0 + C1 * w + C2 * w * t) for t in TORQUE_AXIS]
        out.append(f"rate = {row(vals)}")
    out.append("")
    out.append("[converter]")
    out.append("speed_ratio = 0, 0.2, 0.4, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 1.0")
    out.append("torque_ratio = 2.1, 1.85, 1.6, 1.35, 1.22, 1.1, 1.04, 1.0, 1.0, 1.0")
    out.append("k_factor = 130, 132, 136, 145, 155, 175, 195, 240, 350, 5000")
    out.append("lockup_turbine_speed = 125")
    out.append("unlock_turbine_speed = 110")
    out.append("coast_min_turbine_speed = 85")
    out.append("")
    out.append("[transmission]")
    out.append("gear_ratios = 4.56, 2.97, 2.08, 1.69, 1.27, 1.0, 0.85, 0.65")
    out.append("gear_inertia = 0.09, 0.08, 0.075, 0.07, 0.065, 0.06, 0.058, 0.055")
    out.append(f"throttle = {row(THROTTLE_AXIS)}")
    for i, up in enumerate(UPSHIFT):
        out.append(f"upshift_{i + 1} = {row(up)}")
    for i, up in enumerate(UPSHIFT):
        # Closed throttle downshifts early so the turbine stays above the
        # fuel-cut floor while coasting; loaded columns keep a wide band.
        down = [0.9 * up[0]] + [0.75 * v - 0.5 for v in up[1:]]
        out.append(f"downshift_{i + 2} = {row(down)}")
    out.append("")
    out.append("[body]")
    out.append("mass = 1850")
    out.append("frontal_area = 2.3")
    out.append("drag_coeff = 0.32")
    out.append("wheel_radius = 0.35")
    out.append("wheel_inertia = 4.4")
    out.append("final_drive = 2.85")
    out.append("rolling_coeff = 0.010")
    out.append("air_density = 1.2")
    out.append("brake_gain = 9000")
    path = pathlib.Path(__file__).resolve().parent.parent / "data" / "vehicle_default.cfg"
    path.write_text("\n".join(out) + "\n")


if __name__ == "__main__":
    main()
