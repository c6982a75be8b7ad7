#include <algorithm>
#include <cmath>

#include "ecosim/ecodrive.hpp"
#include "ecosim/error.hpp"

namespace ecosim::eco {

std::string_view to_string(PlanMode m) {
  switch (m) {
    case PlanMode::Baseline: return "baseline";
    case PlanMode::EcoApproach: return "eco_approach";
    case PlanMode::EcoDeparture: return "eco_departure";
    case PlanMode::EcoCruise: return "eco_cruise";
  }
  return "unknown";
}

double SpeedPlan::target_at(double arc) const {
  if (points.empty()) throw Error(ErrorCode::PlanExpired, "empty plan");
  const double off = arc - anchor;
  if (off > points.back().arc_offset + 1e-9) {
    throw Error(ErrorCode::PlanExpired, "position " + std::to_string(arc) + " beyond plan end " +
                                            std::to_string(end_arc()));
  }
  if (off <= points.front().arc_offset) return points.front().target_speed;
  const auto it = std::lower_bound(points.begin(), points.end(), off,
                                   [](const PlanPoint& p, double x) { return p.arc_offset < x; });
  if (it == points.end()) return points.back().target_speed;
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double f = (off - a.arc_offset) / (b.arc_offset - a.arc_offset);
  return a.target_speed + f * (b.target_speed - a.target_speed);
}

bool plan_is_legal(const SpeedPlan& plan, const world::RouteView* route) {
  for (std::size_t i = 0; i < plan.points.size(); ++i) {
    const auto& p = plan.points[i];
    if (!std::isfinite(p.target_speed) || p.target_speed < 0.0) return false;
    if (i > 0 && !(p.arc_offset > plan.points[i - 1].arc_offset)) return false;
    if (route && p.target_speed > route->speed_limit_at(plan.anchor + p.arc_offset) + 1e-9) return false;
  }
  return true;
}

// --- Follower ---

double Follower::coast_force(const VehicleState& state) const {
  const auto& c = *cfg_;
  const int gear = state.powertrain.gear;
  const double w_t = state.speed * c.overall_ratio(gear) / c.wheel_radius;
  if (w_t < c.converter.coast_min_turbine_speed) return 0.0;
  return vdpt::motoring_torque(c, w_t) * c.overall_ratio(gear) / c.wheel_radius;
}

ControlCommand Follower::command(double a_des, const VehicleState& state, double grade, bool allow_fuel_cut,
                                 bool force_coast) {
  const auto& c = *cfg_;
  const double v = state.speed;
  const int gear = state.powertrain.gear;
  ControlCommand cmd;

  // Standing still with nothing to do: hold the brake, declutched.
  if (v < 0.05 && a_des <= 0.0) {
    integ_ = 0.0;
    have_last_ = false;
    cmd.brake = 0.3;
    cmd.dfco_request = true;
    return cmd;
  }
  if (have_last_) integ_ = std::clamp(integ_ + ki_ * (last_a_des_ - state.accel) * vdpt::kStep, -1.0, 1.0);
  last_a_des_ = a_des;
  have_last_ = true;

  const double a_cmd = a_des + integ_;
  const double force = vdpt::effective_mass(c, gear) * a_cmd + vdpt::road_load(c, v, grade).total();
  if (force > 0.0 && !force_coast) {
    const double overall = c.overall_ratio(gear);
    const double t_turbine = force * c.wheel_radius / overall;
    const double w_e = std::max(state.powertrain.engine_speed, c.idle_speed);
    double t_engine = t_turbine;
    if (!state.powertrain.converter_locked) {
      const double w_t = v * overall / c.wheel_radius;
      t_engine = t_turbine / c.converter.torque_ratio_at(std::min(1.0, w_t / w_e));
    }
    cmd.throttle = std::clamp(t_engine / c.engine.max_torque.at(w_e), 0.0, 1.0);
    if (cmd.throttle >= 1.0) integ_ = std::min(integ_, 0.0);  // no wind-up at full load
    return cmd;
  }
  const double need = -force;
  const double engine_brake = coast_force(state);
  if (force_coast || (allow_fuel_cut && need >= engine_brake)) {
    cmd.dfco_request = true;
    cmd.brake = std::clamp((need - engine_brake) / c.brake_gain, 0.0, 1.0);
  }
  return cmd;
}

// --- Baseline ---

const Obstacle* leader_of(const EnvSnapshot& snap, double ego_arc) {
  const Obstacle* best = nullptr;
  for (const auto& o : snap.visible_obstacles) {
    if (o.arc_position <= ego_arc) continue;
    if (!best || o.arc_position < best->arc_position) best = &o;
  }
  return best;
}

BaselineDriver::BaselineDriver(const world::RouteView& route, const vdpt::VehicleConfig& cfg,
                               const world::IdmParams& idm, double tau, double ki)
    : route_(route), idm_(idm), tau_(tau), follower_(cfg, ki) {}

double BaselineDriver::target_accel(const EnvSnapshot& snap, const VehicleState& state) {
  const double v = state.speed;
  const double v0 = route_.speed_limit_at(state.arc_position);
  Obstacle ego;
  ego.arc_position = state.arc_position;
  ego.speed = v;
  ego.length = kEgoLength;
  double a = world::car_following_accel(ego, leader_of(snap, state.arc_position), v0, idm_);

  std::optional<world::ControlView> view;
  if (snap.next_control) {
    const auto& c = *snap.next_control;
    view = world::ControlView{c.distance, c.kind, c.id, std::nullopt};
    if (c.kind == cycle::ControlKind::TrafficLight) {
      for (const auto& m : snap.spat) {
        if (m.light_id == c.id) view->phase = m.current_phase;
      }
    }
  }
  a = std::min(a, responder_.accel_cap(view, v, v0, vdpt::kStep, idm_));
  a = std::min(a, route_.limit_lookahead(state.arc_position, v, 150.0));
  return std::clamp(a, -idm_.b_max, idm_.a_max);
}

double BaselineDriver::target_speed(double a_des, const VehicleState& state) const {
  return std::max(0.0, state.speed + tau_ * a_des);
}

ControlCommand BaselineDriver::drive(const EnvSnapshot& snap, const VehicleState& state) {
  const double a = target_accel(snap, state);
  return follower_.command(a, state, snap.grade_here);
}

// --- plan following ---

double plan_target(const SpeedPlan& plan, const VehicleState& state) {
  plan.target_at(state.arc_position);  // throws past the end
  // Preview a little ahead so a plan starting from rest still pulls away.
  const double preview = std::max(1.0, 0.5 * state.speed);
  return plan.target_at(std::min(state.arc_position + preview, plan.end_arc()));
}

ControlCommand follow_plan(const SpeedPlan& plan, const VehicleState& state, const EnvSnapshot& snap,
                           Follower& follower, double baseline_target_speed, double tau) {
  const double v = state.speed;
  const double v_here = plan.target_at(state.arc_position);
  const double v_plan = plan_target(plan, state);
  const double v_tgt = std::min(v_plan, baseline_target_speed);
  const double a_des = (v_tgt - v) / tau;
  const bool overridden = baseline_target_speed < v_plan;
  // Coast only while on the profile; when held back (e.g. by a leader) track it normally.
  constexpr double kLag = 0.5;
  constexpr double kCreep = 0.1;
  const bool coast = plan.mode == PlanMode::EcoApproach && !overridden && v_plan <= v_here && v > kCreep &&
                     v > v_plan - kLag;
  return follower.command(a_des, state, snap.grade_here, true, coast);
}

}  // namespace ecosim::eco
