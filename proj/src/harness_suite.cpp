#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ecosim/error.hpp"
#include "ecosim/harness.hpp"

namespace ecosim::harness {

using cycle::ControlKind;
using cycle::CycleSegment;
using cycle::DriveCycle;

namespace {

constexpr double kTurnCurvature = 0.08;  // 1/m, 12.5 m radius
constexpr double kTurnLimit = 6.0;       // m/s, below sqrt(a_lat / kappa)
constexpr double kPieceMin = 100.0;      // m, grade pieces
constexpr double kPieceMax = 300.0;

double round_to(double v, double q) { return std::round(v / q) * q; }

// lo + (hi - lo) * u^gamma has mean `mean` for uniform u.
double skewed(world::Rng& rng, const Band& b) {
  if (b.hi <= b.lo) return b.lo;
  const double gamma = (b.hi - b.lo) / (b.mean - b.lo) - 1.0;
  return b.lo + (b.hi - b.lo) * std::pow(rng.uniform(), gamma);
}

int skewed_int(world::Rng& rng, const Band& b) {
  const int lo = static_cast<int>(std::lround(b.lo));
  const int hi = static_cast<int>(std::lround(b.hi));
  return std::clamp(static_cast<int>(std::lround(skewed(rng, b))), lo, hi);
}

void check_band(const Band& b, const std::string& what) {
  if (!(b.lo <= b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) {
    throw Error(ErrorCode::SpecInfeasible, what + ": empty band");
  }
  const bool point = b.lo == b.hi;
  if (point ? b.mean != b.lo : !(b.mean > b.lo && b.mean < b.hi)) {
    throw Error(ErrorCode::SpecInfeasible, what + ": mean outside band");
  }
}

void check_class(const ClassSpec& c, const SuiteSpec& spec) {
  if (c.count < 0) throw Error(ErrorCode::SpecInfeasible, c.prefix + ": negative count");
  if (c.count == 0) return;
  check_band(c.distance_km, c.prefix + " distance");
  check_band(c.lights, c.prefix + " lights");
  check_band(c.intersections, c.prefix + " intersections");
  if (c.distance_km.lo <= 0.0) throw Error(ErrorCode::SpecInfeasible, c.prefix + ": distance must be positive");
  if (c.lights.lo < 0.0) throw Error(ErrorCode::SpecInfeasible, c.prefix + ": negative light count");
  if (c.lights.lo > c.intersections.hi) {
    throw Error(ErrorCode::SpecInfeasible, c.prefix + ": more lights than intersections");
  }
  if (c.lights.mean > c.intersections.mean) {
    throw Error(ErrorCode::SpecInfeasible, c.prefix + ": mean lights exceed mean intersections");
  }
  if ((c.intersections.hi + 1.0) * spec.min_control_gap > c.distance_km.lo * 1000.0) {
    throw Error(ErrorCode::SpecInfeasible, c.prefix + ": controls do not fit the shortest distance");
  }
  if (c.limits.empty()) throw Error(ErrorCode::SpecInfeasible, c.prefix + ": no speed limits");
  for (double v : c.limits) {
    if (!(v > kTurnLimit)) throw Error(ErrorCode::SpecInfeasible, c.prefix + ": speed limit too low");
  }
}

struct Draft {
  double length = 0.0;
  int lights = 0;
  int stops = 0;
};

Draft draft(world::Rng& rng, const ClassSpec& c) {
  Draft d;
  d.length = round_to(skewed(rng, c.distance_km) * 1000.0, 0.1);
  d.lights = skewed_int(rng, c.lights);
  const int inter = std::max(d.lights, skewed_int(rng, c.intersections));
  d.stops = inter - d.lights;
  return d;
}

// Bounded, mean-reverting random walk, reflected at the bounds.
double walk(world::Rng& rng, double g, const SuiteSpec& spec) {
  g = spec.grade_reversion * g + spec.grade_step * rng.normal();
  if (g > spec.max_grade) g = 2.0 * spec.max_grade - g;
  if (g < -spec.max_grade) g = -2.0 * spec.max_grade - g;
  return std::clamp(g, -spec.max_grade, spec.max_grade);
}

DriveCycle realize(world::Rng& rng, const Draft& d, const ClassSpec& c, const SuiteSpec& spec, std::string id) {
  const int n = d.lights + d.stops;
  // Control lines from random gap weights, each gap at least min_control_gap.
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  double wsum = 0.0;
  for (double& x : w) wsum += (x = rng.uniform());
  const double spare = d.length - (n + 1) * spec.min_control_gap;
  std::vector<double> lines;
  double at = 0.0;
  for (int i = 0; i < n; ++i) {
    at += spec.min_control_gap + spare * w[static_cast<std::size_t>(i)] / wsum;
    lines.push_back(round_to(at, 0.1));
  }
  // Which lines carry lights: partial Fisher-Yates.
  std::vector<ControlKind> kinds(static_cast<std::size_t>(n), ControlKind::StopSign);
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < d.lights; ++i) {
    const int j = i + static_cast<int>(rng.bits() % static_cast<std::uint64_t>(n - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    kinds[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = ControlKind::TrafficLight;
  }

  DriveCycle out;
  out.id = std::move(id);
  double start = 0.0;
  double grade = 0.0;
  auto push = [&](double len, double limit, double curv, ControlKind k) {
    CycleSegment s;
    s.start_m = start;
    s.length_m = len;
    s.speed_limit_mps = limit;
    s.grade = round_to(grade, 1e-4);
    s.curvature_inv_m = curv;
    s.control = k;
    out.segments.push_back(s);
    start = round_to(start + len, 0.01);
  };

  for (int i = 0; i <= n; ++i) {
    const double end = i < n ? lines[static_cast<std::size_t>(i)] : d.length;
    const double limit = c.limits[static_cast<std::size_t>(rng.bits() % c.limits.size())];
    double remaining = round_to(end - start, 0.01);
    // A turn right after an intersection.
    if (i > 0 && rng.uniform() < spec.turn_share) {
      const double len = round_to(std::numbers::pi / 2.0 / kTurnCurvature, 0.01);
      const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
      push(len, kTurnLimit, sign * kTurnCurvature, ControlKind::None);
      remaining = round_to(end - start, 0.01);
    }
    while (remaining > 0.0) {
      grade = walk(rng, grade, spec);
      double len = round_to(rng.uniform(kPieceMin, kPieceMax), 0.1);
      if (remaining - len < kPieceMin / 2.0) len = remaining;
      const double curv = rng.uniform() < 0.2 ? round_to(rng.uniform(-0.003, 0.003), 1e-5) : 0.0;
      remaining = round_to(remaining - len, 0.01);
      const bool last = remaining <= 0.0;
      push(len, limit, curv, last && i < n ? kinds[static_cast<std::size_t>(i)] : ControlKind::None);
    }
  }
  cycle::validate(out);
  return out;
}

std::vector<DriveCycle> generate_class(world::Rng& rng, const ClassSpec& c, const SuiteSpec& spec) {
  if (c.count == 0) return {};
  auto within = [&](double v, double target) { return std::abs(v - target) <= spec.mean_tolerance * target; };
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    std::vector<Draft> drafts;
    double dist = 0.0, lights = 0.0, inter = 0.0;
    for (int i = 0; i < c.count; ++i) {
      drafts.push_back(draft(rng, c));
      dist += drafts.back().length / 1000.0;
      lights += drafts.back().lights;
      inter += drafts.back().lights + drafts.back().stops;
    }
    const double n = c.count;
    if (!within(dist / n, c.distance_km.mean) || !within(lights / n, c.lights.mean) ||
        !within(inter / n, c.intersections.mean)) {
      continue;
    }
    std::vector<DriveCycle> out;
    for (int i = 0; i < c.count; ++i) {
      std::string id = c.prefix + "_" + (i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
      out.push_back(realize(rng, drafts[static_cast<std::size_t>(i)], c, spec, std::move(id)));
    }
    return out;
  }
  throw Error(ErrorCode::SpecInfeasible, c.prefix + ": no suite within the mean tolerance");
}

}  // namespace

SuiteSpec default_suite_spec() {
  SuiteSpec s;
  s.short_trips.prefix = "short";
  s.short_trips.count = 10;
  s.short_trips.distance_km = {1.54, 2.17, 1.73};
  s.short_trips.lights = {0, 4, 1.1};
  s.short_trips.intersections = {3, 9, 6};
  s.short_trips.limits = {11.2, 13.4, 15.6};  // 25, 30, 35 mph
  s.long_trips.prefix = "long";
  s.long_trips.count = 10;
  s.long_trips.distance_km = {11.7, 20.3, 15.9};
  s.long_trips.lights = {2, 22, 11};
  s.long_trips.intersections = {14, 31, 21.4};
  s.long_trips.limits = {13.4, 15.6, 17.9, 20.1, 24.6};  // 30 to 55 mph
  return s;
}

std::vector<DriveCycle> generate_suite(std::uint64_t seed, const SuiteSpec& spec) {
  if (!(spec.mean_tolerance >= 0.0) || !(spec.max_grade > 0.0) || spec.max_grade >= cycle::kMaxAbsGrade ||
      !(spec.grade_step >= 0.0) || !(spec.min_control_gap > 0.0) || spec.max_attempts <= 0) {
    throw Error(ErrorCode::SpecInfeasible, "suite parameters out of range");
  }
  check_class(spec.short_trips, spec);
  check_class(spec.long_trips, spec);
  world::Rng rng(seed);
  auto out = generate_class(rng, spec.short_trips, spec);
  auto longs = generate_class(rng, spec.long_trips, spec);
  out.insert(out.end(), longs.begin(), longs.end());
  return out;
}

DriveCycle hill_cycle() {
  // Breakpoints (m): controls at their segment ends, grade per piece.
  struct Piece {
    double end;
    double grade;
    ControlKind control;
  };
  const Piece pieces[] = {
      {300, -0.01, ControlKind::StopSign},   {400, -0.01, ControlKind::None},
      {560, 0.01, ControlKind::TrafficLight}, {800, 0.01, ControlKind::None},
      {820, 0.02, ControlKind::StopSign},    {1100, 0.02, ControlKind::TrafficLight},
      {1200, 0.02, ControlKind::None},       {1380, 0.0225, ControlKind::StopSign},
      {1600, 0.0225, ControlKind::None},
  };
  DriveCycle c;
  c.id = "hill_1600";
  double start = 0.0;
  for (const auto& p : pieces) {
    c.segments.push_back(CycleSegment{start, p.end - start, 13.4, p.grade, 0.0, p.control});
    start = p.end;
  }
  cycle::validate(c);
  return c;
}

double free_flow_time(const DriveCycle& c) {
  double t = 0.0;
  for (const auto& s : c.segments) t += s.length_m / s.speed_limit_mps;
  return t;
}

}  // namespace ecosim::harness
