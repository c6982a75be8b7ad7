#include <algorithm>
#include <cmath>
#include <limits>

#include "ecosim/ecodrive.hpp"
#include "ecosim/error.hpp"

namespace ecosim::eco {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSample = 1.0;  // m, route sampling inside a stage

// Fuel rate (g/s) holding mean speed vm with acceleration a. Ideal-ratio
// stand-in for the top feasible locked gear: the engine sits at the lockup
// floor (or top-gear speed above it) unless torque forces a lower ratio.
double stage_rate(const vdpt::VehicleConfig& cfg, double vm, double a, double grade, double extra_force = 0.0) {
  const double r = cfg.wheel_radius;
  const double force = vdpt::effective_mass(cfg, vdpt::kGears) * a + vdpt::road_load(cfg, vm, grade).total() + extra_force;
  const double power = force * vm;
  double w = std::max(vm * cfg.overall_ratio(vdpt::kGears) / r, cfg.converter.lockup_turbine_speed);
  const double w_cap = std::max(w, vm * cfg.overall_ratio(1) / r);
  while (power > 0.0 && power / w > cfg.engine.max_torque.at(w) && w < w_cap) w = std::min(w_cap, w + 5.0);
  const double torque = power / w;
  if (torque <= -vdpt::motoring_torque(cfg, w)) return 0.0;  // fuel cut
  return cfg.engine.fuel_rate.at(w, std::max(torque, 0.0));
}

// Fuel per joule of extra tractive work at steady v (g/J).
double marginal_fuel(const vdpt::VehicleConfig& cfg, double v) {
  constexpr double kProbe = 200.0;  // N
  return (stage_rate(cfg, v, 0.0, 0.0, kProbe) - stage_rate(cfg, v, 0.0, 0.0)) / (kProbe * v);
}

std::vector<double> band_grid(double lo, double hi, double dv) {
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double v = lo + k * dv;
    if (v > hi + 1e-9) break;
    out.push_back(v);
  }
  return out;
}

}  // namespace

RouteWindow route_window(const world::RouteView& route, double from, double horizon, double ds) {
  RouteWindow w;
  w.ds = ds;
  const auto& edges = route.edges().edges;
  const int n = static_cast<int>(std::floor(horizon / ds + 1e-9));
  for (int i = 0; i < n; ++i) {
    const double s0 = from + i * ds;
    double limit = kInf;
    double curv = 0.0;
    double grade = 0.0;
    int count = 0;
    for (double s = s0; s <= s0 + ds + 1e-9; s += kSample) {
      const auto& e = edges[route.edge_at(s)];
      limit = std::min(limit, e.speed_limit);
      curv = std::max(curv, std::abs(e.curvature));
      grade += e.grade;
      ++count;
    }
    w.limit.push_back(limit);
    w.curvature.push_back(curv);
    w.grade.push_back(grade / count);
  }
  return w;
}

double quasi_static_fuel(const vdpt::VehicleConfig& cfg, double va, double vb, double ds, double grade) {
  if (va + vb <= 0.0) return kInf;
  const double a = (vb * vb - va * va) / (2.0 * ds);
  const double dt = 2.0 * ds / (va + vb);
  return stage_rate(cfg, 0.5 * (va + vb), a, grade) * dt;
}

double calibrate_lambda(const vdpt::VehicleConfig& cfg, const BandSpec& band, double dv, double ds) {
  const auto grid = band_grid(band.v_low, band.v_high, dv);
  std::size_t ref = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - band.v_ref) < std::abs(grid[ref] - band.v_ref)) ref = i;
  }
  auto per_m = [&](double v) { return quasi_static_fuel(cfg, v, v, ds, 0.0) / ds; };  // f(v)/v
  const double vr = grid[ref];
  double lo = -kInf;
  double hi = kInf;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (j == ref) continue;
    const double vj = grid[j];
    const double bound = (per_m(vj) - per_m(vr)) / (1.0 / vr - 1.0 / vj);
    if (vj > vr) hi = std::min(hi, bound);
    else lo = std::max(lo, bound);
  }
  // One-sided intervals extend past the binding bound; an empty one
  // (non-convex fuel) falls back to the midpoint, splitting the violation.
  // Negative values are legitimate: below the economic speed, fuel alone
  // already favours going faster.
  if (!std::isfinite(hi) && !std::isfinite(lo)) return 0.0;
  if (!std::isfinite(hi)) return lo + std::abs(lo) * 0.25 + 0.01;
  if (!std::isfinite(lo)) return hi - std::abs(hi) * 0.25 - 0.01;
  return 0.5 * (lo + hi);
}

CruiseSolution solve_cruise(const CruiseProblem& prob) {
  const std::size_t n = prob.speeds.size() - 1;
  std::vector<std::vector<double>> value(n + 1);
  std::vector<std::vector<std::size_t>> arg(n);
  value[n].resize(prob.speeds[n].size());
  for (std::size_t b = 0; b < prob.speeds[n].size(); ++b) value[n][b] = prob.terminal(b);
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t na = prob.speeds[i].size();
    const std::size_t nb = prob.speeds[i + 1].size();
    value[i].assign(na, kInf);
    arg[i].assign(na, 0);
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t b = nb; b-- > 0;) {
        const double c = prob.cost(i, a, b);
        if (!std::isfinite(c) || !std::isfinite(value[i + 1][b])) continue;
        const double total = c + value[i + 1][b];
        if (total < value[i][a]) {
          value[i][a] = total;
          arg[i][a] = b;
        }
      }
    }
  }
  CruiseSolution sol;
  sol.cost = value[0][prob.start];
  sol.path.push_back(prob.start);
  if (!std::isfinite(sol.cost)) return sol;
  for (std::size_t i = 0; i < n; ++i) sol.path.push_back(arg[i][sol.path.back()]);
  return sol;
}

CruiseProblem build_cruise_problem(const vdpt::VehicleConfig& cfg, const RouteWindow& w, const BandSpec& band,
                                   double v_now, const StrategyConfig& s, double lambda) {
  const std::size_t n = w.grade.size();
  if (n == 0) throw Error(ErrorCode::InfeasibleBand, "empty cruise window");
  auto stage_cap = [&](std::size_t i) {
    double cap = w.limit[i];
    if (w.curvature[i] > 0.0) cap = std::min(cap, std::sqrt(s.a_lat_max / w.curvature[i]));
    return cap;
  };
  CruiseProblem prob;
  for (std::size_t i = 0; i <= n; ++i) {
    double cap = kInf;
    if (i > 0) cap = std::min(cap, stage_cap(i - 1));
    if (i < n) cap = std::min(cap, stage_cap(i));
    auto speeds = band_grid(band.v_low, std::min(band.v_high, cap), s.dp_dv);
    if (speeds.empty()) {
      throw Error(ErrorCode::InfeasibleBand, "no admissible speed at stage " + std::to_string(i) + " (cap " +
                                                 std::to_string(cap) + " m/s, band floor " +
                                                 std::to_string(band.v_low) + " m/s)");
    }
    prob.speeds.push_back(std::move(speeds));
  }
  const auto& s0 = prob.speeds[0];
  for (std::size_t k = 0; k < s0.size(); ++k) {
    if (std::abs(s0[k] - v_now) < std::abs(s0[prob.start] - v_now)) prob.start = k;
  }
  const double ds = w.ds;
  const double a_min = s.dp_a_min;
  const double a_max = s.dp_a_max;
  const auto speeds = prob.speeds;
  const auto grades = w.grade;
  const vdpt::VehicleConfig* c = &cfg;
  prob.cost = [=](std::size_t i, std::size_t a, std::size_t b) {
    const double va = speeds[i][a];
    const double vb = speeds[i + 1][b];
    const double acc = (vb * vb - va * va) / (2.0 * ds);
    if (acc < a_min - 1e-12 || acc > a_max + 1e-12) return kInf;
    return quasi_static_fuel(*c, va, vb, ds, grades[i]) + lambda * (2.0 * ds / (va + vb));
  };
  // Fuel to restore kinetic energy lost below the reference speed; surplus
  // earns no credit, otherwise plans would bank speed at the window end.
  const double kappa = marginal_fuel(cfg, band.v_ref);
  const double mass = cfg.mass;
  const double v_ref = band.v_ref;
  const auto last = prob.speeds[n];
  prob.terminal = [=](std::size_t b) { return kappa * 0.5 * mass * std::max(0.0, v_ref * v_ref - last[b] * last[b]); };
  return prob;
}

SpeedPlan eco_cruise_plan(const vdpt::VehicleConfig& cfg, const RouteWindow& w, const BandSpec& band,
                          const VehicleState& state, const StrategyConfig& s, double* cost_out) {
  const double lambda = s.lambda ? *s.lambda : calibrate_lambda(cfg, band, s.dp_dv, w.ds);
  const auto prob = build_cruise_problem(cfg, w, band, state.speed, s, lambda);
  const auto sol = solve_cruise(prob);
  if (!std::isfinite(sol.cost)) {
    throw Error(ErrorCode::InfeasibleBand, "no admissible speed trajectory within acceleration bounds");
  }
  SpeedPlan plan;
  plan.anchor = state.arc_position;
  plan.mode = PlanMode::EcoCruise;
  for (std::size_t i = 0; i < sol.path.size(); ++i) {
    plan.points.push_back({i * w.ds, prob.speeds[i][sol.path[i]]});
  }
  if (cost_out) *cost_out = sol.cost;
  return plan;
}

}  // namespace ecosim::eco
