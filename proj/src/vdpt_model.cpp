#include <algorithm>
#include <cmath>

#include "ecosim/vdpt.hpp"

namespace ecosim::vdpt {

namespace {

constexpr double kRadPerSecToRpm = 60.0 / (2.0 * 3.14159265358979323846);

// The governor only acts near idle; above this band the driver owns torque.
constexpr double kGovernorBand = 1.1;

}  // namespace

double motoring_torque(const VehicleConfig& cfg, double engine_speed) {
  return cfg.motoring_c0 + cfg.motoring_c1 * std::max(0.0, engine_speed);
}

EngineOutput engine_step(const VehicleConfig& cfg, double throttle, double engine_speed, EngineFlags flags,
                         double load_torque, Diagnostics* diag) {
  throttle = std::clamp(throttle, 0.0, 1.0);
  if (flags.shutoff) return {0.0, 0.0};
  if (flags.dfco) return {-motoring_torque(cfg, engine_speed), 0.0};

  const double t_max = cfg.engine.max_torque.at(engine_speed, diag);
  double torque = throttle * t_max;
  if (engine_speed < cfg.idle_speed * kGovernorBand) {
    // Near idle the governor may also pull a free-revving engine back down,
    // but never harder than closed-throttle drag.
    const double governor = load_torque + cfg.idle_governor_gain * (cfg.idle_speed - engine_speed);
    const double held = std::clamp(governor, -motoring_torque(cfg, engine_speed), t_max);
    torque = throttle > 0.0 ? std::max(torque, held) : held;
  }
  double fuel = cfg.engine.fuel_rate.at(engine_speed, std::max(0.0, torque), diag);
  if (flags.cyl_deact) fuel *= cfg.cyl_deact_fuel_scale;
  return {torque, fuel};
}

ConverterOutput converter_step(const ConverterTables& conv, double engine_speed, double turbine_speed, bool locked,
                               double locked_input_torque) {
  if (locked) return {locked_input_torque, locked_input_torque};
  engine_speed = std::max(0.0, engine_speed);
  turbine_speed = std::max(0.0, turbine_speed);
  if (turbine_speed <= engine_speed) {
    const double sr = engine_speed > 0.0 ? turbine_speed / engine_speed : 0.0;
    const double n = engine_speed * kRadPerSecToRpm / conv.k_factor_at(sr);
    const double impeller = n * n;
    return {impeller, conv.torque_ratio_at(sr) * impeller};
  }
  // Overrun: the turbine drives the impeller with the roles of the K-factor
  // curve swapped and unit torque ratio.
  const double sr = engine_speed / turbine_speed;
  const double n = turbine_speed * kRadPerSecToRpm / conv.k_factor_at(sr);
  return {-n * n, -n * n};
}

TransmissionOutput transmission_step(const VehicleConfig& cfg, int gear, double turbine_torque, double vehicle_speed,
                                     double throttle) {
  gear = std::clamp(gear, 1, kGears);
  TransmissionOutput out{turbine_torque * cfg.gear_ratios[gear - 1], gear};
  if (gear < kGears && vehicle_speed > cfg.shift.upshift_speed(gear, throttle)) {
    out.new_gear = gear + 1;
  } else if (gear > 1 && vehicle_speed < cfg.shift.downshift_speed(gear, throttle)) {
    out.new_gear = gear - 1;
  }
  return out;
}

RoadLoad road_load(const VehicleConfig& cfg, double speed, double grade) {
  const double theta = std::atan(grade);
  RoadLoad load;
  load.aero = 0.5 * cfg.air_density * cfg.drag_coeff * cfg.frontal_area * speed * speed;
  load.rolling = speed > 0.0 ? cfg.rolling_coeff * cfg.mass * kGravity * std::cos(theta) : 0.0;
  load.grade = cfg.mass * kGravity * std::sin(theta);
  return load;
}

double effective_mass(const VehicleConfig& cfg, int gear) {
  const double ratio = cfg.overall_ratio(gear);
  const double r = cfg.wheel_radius;
  return cfg.mass + (cfg.wheel_inertia + cfg.gear_inertia[gear - 1] * ratio * ratio) / (r * r);
}

VehicleState body_step(const VehicleConfig& cfg, const VehicleState& state, double output_torque, double brake_cmd,
                       double grade, double dt) {
  const double v = state.speed;
  const double m_eff = effective_mass(cfg, state.powertrain.gear);
  const double traction = output_torque * cfg.final_drive / cfg.wheel_radius;
  const double brake = cfg.brake_gain * std::clamp(brake_cmd, 0.0, 1.0);
  const double accel = (traction - brake - road_load(cfg, v, grade).total()) / m_eff;

  VehicleState next = state;
  next.speed = std::max(0.0, v + accel * dt);
  next.accel = (next.speed - v) / dt;
  next.arc_position = state.arc_position + next.speed * dt;
  return next;
}

double fuel_integrate(PowertrainState& state, double dt) {
  const double inc = std::max(0.0, state.fuel_rate) * dt;
  state.fuel_total += inc;
  return inc;
}

Powertrain::Powertrain(const VehicleConfig& cfg, double initial_speed, double initial_arc) : cfg_(cfg) {
  state_.arc_position = initial_arc;
  state_.speed = std::max(0.0, initial_speed);
  state_.powertrain.engine_speed = cfg_.idle_speed;
  // Start in the gear the shift schedule would hold at light throttle.
  int gear = 1;
  while (gear < kGears && state_.speed > cfg_.shift.upshift_speed(gear, 0.0)) ++gear;
  state_.powertrain.gear = gear;
  const double turbine = state_.speed / cfg_.wheel_radius * cfg_.overall_ratio(gear);
  state_.powertrain.engine_speed = std::max(cfg_.idle_speed, turbine);
}

const VehicleState& Powertrain::step(const ControlCommand& cmd, double grade, EngineFlags extra_flags) {
  auto& pt = state_.powertrain;
  const double throttle = std::clamp(cmd.throttle, 0.0, 1.0);
  const double v = state_.speed;

  if (cmd.gear_hold) {
    pt.gear = std::clamp(*cmd.gear_hold, 1, kGears);
  } else {
    pt.gear = transmission_step(cfg_, pt.gear, 0.0, v, throttle).new_gear;
  }

  const double ratio = cfg_.gear_ratios[pt.gear - 1];
  const double turbine_speed = v / cfg_.wheel_radius * cfg_.overall_ratio(pt.gear);
  const bool coast_request = cmd.dfco_request && throttle == 0.0;
  const auto& conv = cfg_.converter;

  // Fuel-cut coasting holds the clutch closed so the engine keeps braking;
  // once the turbine falls below the floor the driveline declutches.
  pt.neutral = coast_request && turbine_speed < conv.coast_min_turbine_speed;
  if (coast_request) {
    pt.converter_locked = !pt.neutral;
  } else if (pt.gear < 3) {
    pt.converter_locked = false;
  } else {
    pt.converter_locked = pt.converter_locked ? turbine_speed >= conv.unlock_turbine_speed
                                              : turbine_speed >= conv.lockup_turbine_speed;
  }

  double turbine_torque = 0.0;
  double fuel_rate = 0.0;
  bool dfco_active = false;
  if (pt.converter_locked) {
    pt.engine_speed = turbine_speed;
    EngineFlags flags = extra_flags;
    flags.dfco = coast_request && pt.engine_speed > cfg_.idle_speed;
    dfco_active = flags.dfco;
    const auto eng = engine_step(cfg_, throttle, pt.engine_speed, flags, 0.0, &diag_);
    turbine_torque = converter_step(conv, pt.engine_speed, turbine_speed, true, eng.torque).turbine_torque;
    fuel_rate = eng.fuel_rate;
  } else {
    const double h = kStep / kSubsteps;
    const double floor = extra_flags.shutoff ? 0.0 : cfg_.idle_speed;
    for (int i = 0; i < kSubsteps; ++i) {
      ConverterOutput c{};
      if (!pt.neutral) c = converter_step(conv, pt.engine_speed, turbine_speed, false);
      EngineFlags flags = extra_flags;
      flags.dfco = coast_request && !pt.neutral && pt.engine_speed > cfg_.idle_speed;
      const auto eng = engine_step(cfg_, throttle, pt.engine_speed, flags, c.impeller_torque, &diag_);
      pt.engine_speed += h * (eng.torque - c.impeller_torque) / cfg_.engine_inertia;
      pt.engine_speed = std::max(pt.engine_speed, floor);
      turbine_torque += c.turbine_torque / kSubsteps;
      fuel_rate += eng.fuel_rate / kSubsteps;
      dfco_active = dfco_active || flags.dfco;
    }
  }

  const double output_torque = turbine_torque * ratio;
  state_ = body_step(cfg_, state_, output_torque, cmd.brake, grade, kStep);
  if (pt.converter_locked) {
    pt.engine_speed = state_.speed / cfg_.wheel_radius * cfg_.overall_ratio(pt.gear);
  }
  pt.dfco_active = dfco_active;
  pt.fuel_rate = fuel_rate;
  fuel_integrate(pt, kStep);
  return state_;
}

}  // namespace ecosim::vdpt
