#!/usr/bin/env python3
"""Regenerates data/urban_excerpt.csv: a 1 Hz stop-and-go speed trace in the
style of a certification urban cycle (idle, launch, cruise, brake to stop).

Used to calibrate the vehicle brake gain; decelerations stay within 1.5 m/s^2.
"""
import pathlib
import random

SEED = 75
MICRO_TRIPS = 8


def trip(rng):
    """(duration_s, accel_mps2) legs of one micro-trip, ending at rest."""
    peak = rng.uniform(8.0, 15.0)
    up = rng.uniform(0.9, 1.4)
    down = rng.uniform(0.8, 1.5)
    legs = [(rng.randint(5, 15), 0.0), (peak / up, up), (rng.randint(8, 30), 0.0)]
    if rng.random() < 0.5:  # partial slow-down and re-acceleration
        dip = rng.uniform(2.0, 5.0)
        legs += [(dip / down, -down), (rng.randint(3, 8), 0.0), (dip / up, up)]
    legs.append((peak / down, -down))
    return legs


def main():
    rng = random.Random(SEED)
    legs = [leg for _ in range(MICRO_TRIPS) for leg in trip(rng)] + [(10, 0.0)]
    # Integrate at 10 ms, sample at 1 Hz.
    dt, t, v, rows = 0.01, 0.0, 0.0, []
    next_sample = 0.0
    for duration, accel in legs:
        end = t + duration
        while t < end - 1e-9:
            if t >= next_sample - 1e-9:
                rows.append((round(next_sample), max(v, 0.0)))
                next_sample += 1.0
            v = max(0.0, v + accel * dt)
            t += dt
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "urban_excerpt.csv"
    with out.open("w") as f:
        f.write("# synthetic urban stop-and-go excerpt, 1 Hz; regenerate with scripts/gen_urban_excerpt.py\n")
        f.write("t_s,speed_mps\n")
        for ts, vs in rows:
            f.write(f"{ts},{vs:.3f}\n")


if __name__ == "__main__":
    main()
