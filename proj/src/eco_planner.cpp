#include <algorithm>
#include <cmath>

#include "ecosim/ecodrive.hpp"
#include "ecosim/error.hpp"

namespace ecosim::eco {

namespace {

constexpr double kStopped = 0.1;        // m/s
constexpr double kDepartMaxSpeed = 1.0; // m/s, departure starts only from (near) rest
constexpr double kCruiseRetry = 10.0;   // m between attempts after an infeasible band

void clip_to_limits(SpeedPlan& plan, const world::RouteView& route) {
  for (auto& p : plan.points) p.target_speed = std::min(p.target_speed, route.speed_limit_at(plan.anchor + p.arc_offset));
}

}  // namespace

Planner::Planner(const world::RouteView& route, const vdpt::VehicleConfig& cfg, const StrategyConfig& s,
                 const world::IdmParams& idm)
    : route_(route),
      cfg_(cfg),
      s_(s),
      baseline_(route, cfg, idm, s.tau, s.ki),
      follower_(cfg, s.ki),
      coast_(cfg, s.approach_brake_speed),
      departure_(cfg, s_) {}

bool Planner::stop_predicted(const EnvSnapshot& snap, const VehicleState& st) const {
  if (!snap.next_control) return false;
  const auto& c = *snap.next_control;
  if (c.kind == cycle::ControlKind::StopSign) return true;
  if (c.kind != cycle::ControlKind::TrafficLight) return false;
  for (const auto& m : snap.spat) {
    if (m.light_id == c.id) return predictor_.phase_after(m, c.distance / std::max(st.speed, 1.0)) != Phase::Green;
  }
  return false;
}

void Planner::adopt(SpeedPlan p) {
  if (!plan_is_legal(p, &route_)) {
    ++illegal_plans_;
    return;
  }
  follower_.reset();
  plan_ = std::move(p);
}

ControlCommand Planner::step(const EnvSnapshot& snap) {
  const auto& st = snap.ego_echo;
  const double v = st.speed;
  const double arc = st.arc_position;
  for (const auto& m : snap.spat) predictor_.observe(m);
  const double a_base = baseline_.target_accel(snap, st);
  const double v_base = baseline_.target_speed(a_base, st);
  baseline_target_speed_ = v_base;
  target_speed_ = v_base;
  if (v < kStopped) was_stopped_ = true;

  // Retire plans that no longer apply.
  if (plan_) {
    bool drop = arc >= plan_->end_arc() - 1e-9;
    if (plan_->mode == PlanMode::EcoApproach) {
      // Slow and released by the baseline (dwell served, light green).
      drop = drop || !stop_predicted(snap, st) || (v < s_.approach_brake_speed && !baseline_.holding());
      if (drop) approach_retired_ = approach_line_;
    } else if (plan_->mode == PlanMode::EcoCruise) {
      drop = drop || arc - plan_->anchor >= s_.replan_distance;
    }
    if (drop) plan_.reset();
  }

  if (s_.approach && (!plan_ || plan_->mode != PlanMode::EcoApproach) && snap.next_control &&
      snap.next_control->arc != approach_retired_) {
    const auto& c = *snap.next_control;
    const double mean_grade =
        c.distance > 1.0 ? (route_.altitude_at(c.arc) - route_.altitude_at(arc)) / c.distance : snap.grade_here;
    if (auto p = eco_approach_plan(snap, st, coast_, predictor_, s_, mean_grade)) {
      clip_to_limits(*p, route_);
      adopt(std::move(*p));
      if (plan_ && plan_->mode == PlanMode::EcoApproach) approach_line_ = c.arc;
    }
  }
  if (!plan_ && s_.departure && was_stopped_ && v < kDepartMaxSpeed && a_base > 0.0 && !baseline_.holding()) {
    auto p = eco_departure_profile(route_.speed_limit_at(arc), snap.grade_here, departure_, arc);
    clip_to_limits(p, route_);
    adopt(std::move(p));
    was_stopped_ = false;
  }
  if (v > kDepartMaxSpeed) was_stopped_ = false;
  if (!plan_ && s_.cruise && arc >= cruise_retry_arc_) {
    const double limit = route_.speed_limit_at(arc);
    BandSpec band{limit, std::max(s_.dp_dv, limit - s_.band_half_width), limit + s_.band_half_width};
    double horizon = std::min(s_.horizon, route_.length() - arc);
    if (auto c = route_.next_control(arc)) horizon = std::min(horizon, c->arc - arc);
    if (v >= band.v_low && horizon >= 3.0 * s_.dp_ds) {
      auto w = route_window(route_, arc, horizon, s_.dp_ds);
      // Stop at the first stage the band cannot enter (slow turn, lower limit).
      std::size_t n = 0;
      while (n < w.grade.size()) {
        double cap = w.limit[n];
        if (w.curvature[n] > 0.0) cap = std::min(cap, std::sqrt(s_.a_lat_max / w.curvature[n]));
        if (cap < band.v_low) break;
        ++n;
      }
      w.grade.resize(n);
      w.limit.resize(n);
      w.curvature.resize(n);
      if (n >= 3) {
        try {
          adopt(eco_cruise_plan(cfg_, w, band, st, s_));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::InfeasibleBand) throw;
        }
      }
      if (!plan_) cruise_retry_arc_ = arc + kCruiseRetry;
    }
  }

  if (plan_) {
    try {
      const auto cmd = follow_plan(*plan_, st, snap, follower_, v_base, s_.tau);
      target_speed_ = std::min(plan_target(*plan_, st), v_base);
      mode_ = plan_->mode;
      return cmd;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PlanExpired) throw;
      plan_.reset();
    }
  }
  mode_ = PlanMode::Baseline;
  return follower_.command(a_base, st, snap.grade_here);
}

}  // namespace ecosim::eco
