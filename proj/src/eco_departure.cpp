#include <algorithm>
#include <cmath>
#include <limits>

#include "ecosim/ecodrive.hpp"

namespace ecosim::eco {

namespace {

constexpr double kProfileStep = 1.0;     // m between plan points
constexpr double kHorizonMargin = 20.0;  // m past the slowest candidate's 95 % point
constexpr double kSimLimit = 300.0;      // s

double tail_accel(double v_target, double a_peak, const StrategyConfig& s) {
  return std::min(a_peak, v_target / s.departure_tail_time);
}

// Kinematic speed-vs-distance of the law, integrated in distance.
std::vector<PlanPoint> law_points(double v_target, double a_peak, double p, double a_tail, double horizon) {
  std::vector<PlanPoint> pts{{0.0, 0.0}};
  double v = 0.0;
  for (double s = kProfileStep; s <= horizon + 1e-9; s += kProfileStep) {
    const double a = departure_accel(v, v_target, a_peak, p, a_tail);
    v = std::min(v_target, std::sqrt(v * v + 2.0 * a * kProfileStep));
    pts.push_back({s, v});
  }
  return pts;
}

double distance_to(double frac, double v_target, double a_peak, double p, double a_tail) {
  double v = 0.0;
  double s = 0.0;
  while (v < frac * v_target) {
    const double a = departure_accel(v, v_target, a_peak, p, a_tail);
    v = std::min(v_target, std::sqrt(v * v + 2.0 * a * kProfileStep));
    s += kProfileStep;
  }
  return s;
}

DepartureCandidate evaluate(const vdpt::VehicleConfig& cfg, const StrategyConfig& s, double v_target, double grade,
                            double a_peak, double p, double horizon) {
  SpeedPlan plan;
  plan.mode = PlanMode::EcoDeparture;
  plan.points = law_points(v_target, a_peak, p, tail_accel(v_target, a_peak, s), horizon);
  vdpt::Powertrain plant(cfg);
  Follower follower(cfg, s.ki);
  EnvSnapshot snap;
  snap.grade_here = grade;
  DepartureCandidate c{a_peak, p, 0.0, std::numeric_limits<double>::infinity()};
  double t = 0.0;
  while (plant.state().arc_position < horizon && t < kSimLimit) {
    const auto& st = plant.state();
    // Same free-road safety cap the baseline applies at run time.
    const double v_base = st.speed + s.tau * world::IdmParams{}.a_max;
    const auto cmd = follow_plan(plan, st, snap, follower, v_base, s.tau);
    plant.step(cmd, grade);
    t += vdpt::kStep;
    if (!std::isfinite(c.time_to_95) && plant.state().speed >= 0.95 * v_target) c.time_to_95 = t;
  }
  c.fuel_per_m = plant.state().powertrain.fuel_total / std::max(plant.state().arc_position, 1e-9);
  return c;
}

}  // namespace

double departure_accel(double v, double v_target, double a_peak, double p, double a_tail) {
  if (v >= v_target) return 0.0;
  return std::max(std::min(a_tail, a_peak), a_peak * std::pow(1.0 - v / v_target, p));
}

const DepartureChoice& DepartureTable::choose(double v_target, double grade) {
  const auto key = std::make_pair(static_cast<int>(std::lround(v_target / 0.5)),
                                  static_cast<int>(std::lround(grade / 0.01)));
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const double vt = std::max(0.5, key.first * 0.5);
  const double g = key.second * 0.01;
  const auto& s = *s_;

  std::vector<std::pair<double, double>> grid;
  for (int i = 0; i < s.departure_a_steps; ++i) {
    const double a = s.departure_a_steps > 1
                         ? s.departure_a_min + (s.departure_a_max - s.departure_a_min) * i / (s.departure_a_steps - 1)
                         : s.departure_a_min;
    for (double p : s.departure_p) grid.emplace_back(a, p);
  }
  DepartureChoice choice;
  for (const auto& [a, p] : grid) {
    choice.horizon = std::max(choice.horizon, distance_to(0.95, vt, a, p, tail_accel(vt, a, s)));
  }
  choice.horizon += kHorizonMargin;
  for (const auto& [a, p] : grid) {
    choice.grid.push_back(evaluate(*cfg_, s, vt, g, a, p, choice.horizon));
    if (choice.grid.size() == 1 || choice.grid.back().fuel_per_m < choice.best.fuel_per_m) {
      choice.best = choice.grid.back();
    }
  }
  return cache_.emplace(key, std::move(choice)).first->second;
}

SpeedPlan eco_departure_profile(double v_target, double grade, DepartureTable& table, double anchor) {
  SpeedPlan plan;
  plan.anchor = anchor;
  plan.mode = PlanMode::EcoDeparture;
  if (v_target <= 0.0) return plan;
  const auto& choice = table.choose(v_target, grade);
  const double a_tail = std::min(choice.best.a_peak, v_target / table.strategy().departure_tail_time);
  plan.points = law_points(v_target, choice.best.a_peak, choice.best.p, a_tail, choice.horizon);
  return plan;
}

}  // namespace ecosim::eco
