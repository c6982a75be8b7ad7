#include <algorithm>
#include <cmath>

#include "ecosim/ecodrive.hpp"
#include "ecosim/error.hpp"

namespace ecosim::eco {

namespace {

constexpr double kCoastTimeLimit = 600.0;  // s
constexpr double kCoastSpeedBucket = 0.25; // m/s
constexpr double kCoastGradeBucket = 0.005;

ControlCommand coast_command() {
  ControlCommand c;
  c.dfco_request = true;
  return c;
}

// Runs the plant coasting from v0; calls visit(distance, speed) each tick.
template <class Visit>
void run_coast(const vdpt::VehicleConfig& cfg, double v0, double v_end, const GradeProfile& grade, Visit visit) {
  vdpt::Powertrain plant(cfg, v0);
  const auto cmd = coast_command();
  double t = 0.0;
  double prev_s = 0.0;
  double prev_v = v0;
  bool first = true;
  while (true) {
    const auto& st = plant.step(cmd, grade(plant.state().arc_position));
    t += vdpt::kStep;
    if (first && st.speed >= v0) {
      throw Error(ErrorCode::NeverReaches, "coast from " + std::to_string(v0) + " m/s does not decelerate");
    }
    first = false;
    if (st.speed <= v_end) {
      const double f = (prev_v - v_end) / std::max(prev_v - st.speed, 1e-12);
      visit(prev_s + f * (st.arc_position - prev_s), v_end, true);
      return;
    }
    visit(st.arc_position, st.speed, false);
    if (t > kCoastTimeLimit) {
      throw Error(ErrorCode::NeverReaches, "coast from " + std::to_string(v0) + " m/s does not reach " +
                                               std::to_string(v_end) + " m/s");
    }
    prev_s = st.arc_position;
    prev_v = st.speed;
  }
}

}  // namespace

double coast_distance(const vdpt::VehicleConfig& cfg, double v0, double v_end, const GradeProfile& grade) {
  if (v0 <= v_end) return 0.0;
  double out = 0.0;
  run_coast(cfg, v0, v_end, grade, [&](double s, double, bool done) {
    if (done) out = s;
  });
  return out;
}

double coast_distance(const vdpt::VehicleConfig& cfg, double v0, double v_end, double grade) {
  return coast_distance(cfg, v0, v_end, [grade](double) { return grade; });
}

std::vector<PlanPoint> coast_profile(const vdpt::VehicleConfig& cfg, double v0, double grade, double spacing,
                                     double v_end) {
  std::vector<PlanPoint> pts{{0.0, v0}};
  if (v0 <= v_end) return pts;
  run_coast(cfg, v0, v_end, [grade](double) { return grade; }, [&](double s, double v, bool done) {
    if (done || s >= pts.back().arc_offset + spacing) {
      if (s > pts.back().arc_offset) pts.push_back({s, v});
    }
  });
  return pts;
}

std::optional<double> CoastTable::node(int vi, int gi) {
  const auto key = std::make_pair(vi, gi);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  std::optional<double> d;
  try {
    const double v0 = vi * kCoastSpeedBucket;
    d = v0 <= end_speed_ ? 0.0 : coast_distance(*cfg_, v0, end_speed_, gi * kCoastGradeBucket);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NeverReaches) throw;
  }
  cache_.emplace(key, d);
  return d;
}

std::optional<double> CoastTable::to_end(double v, double grade) {
  if (v <= end_speed_) return 0.0;
  const int gi = static_cast<int>(std::lround(grade / kCoastGradeBucket));
  const int vi = static_cast<int>(std::floor(v / kCoastSpeedBucket));
  const auto a = node(vi, gi);
  const auto b = node(vi + 1, gi);
  if (!a || !b) return std::nullopt;
  const double f = v / kCoastSpeedBucket - vi;
  return *a + f * (*b - *a);
}

// --- SPaT prediction ---

namespace {

Phase next_phase(Phase p) {
  switch (p) {
    case Phase::Red: return Phase::Green;
    case Phase::Green: return Phase::Yellow;
    case Phase::Yellow: return Phase::Red;
  }
  return Phase::Red;
}

}  // namespace

void SpatPredictor::observe(const SpatMessage& m) {
  durations_[m.light_id][next_phase(m.current_phase)] = m.next_phase_duration;
}

Phase SpatPredictor::phase_after(const SpatMessage& m, double dt) const {
  if (dt < m.time_remaining) return m.current_phase;
  std::map<Phase, double> known;
  if (auto it = durations_.find(m.light_id); it != durations_.end()) known = it->second;
  known[next_phase(m.current_phase)] = m.next_phase_duration;
  // Unknown durations share what the full cycle leaves over.
  double sum = 0.0;
  int unknown = 0;
  for (Phase p : {Phase::Red, Phase::Green, Phase::Yellow}) {
    if (auto it = known.find(p); it != known.end()) sum += it->second;
    else ++unknown;
  }
  const double fill = unknown > 0 ? std::max(0.0, m.full_cycle - sum) / unknown : 0.0;
  auto dur = [&](Phase p) {
    auto it = known.find(p);
    return it != known.end() ? it->second : fill;
  };
  const double cycle = dur(Phase::Red) + dur(Phase::Green) + dur(Phase::Yellow);
  double rest = dt - m.time_remaining;
  if (cycle > 0.0) rest = std::fmod(rest, cycle);
  Phase p = next_phase(m.current_phase);
  for (int i = 0; i < 3; ++i) {
    if (rest < dur(p)) return p;
    rest -= dur(p);
    p = next_phase(p);
  }
  return p;
}

std::optional<SpeedPlan> eco_approach_plan(const EnvSnapshot& snap, const VehicleState& state, CoastTable& table,
                                           const SpatPredictor& predictor, const StrategyConfig& cfg,
                                           std::optional<double> mean_grade) {
  if (!snap.next_control) return std::nullopt;
  const auto& c = *snap.next_control;
  const double v = state.speed;
  if (v < cfg.approach_brake_speed) return std::nullopt;
  if (c.kind == cycle::ControlKind::TrafficLight) {
    const SpatMessage* msg = nullptr;
    for (const auto& m : snap.spat) {
      if (m.light_id == c.id) msg = &m;
    }
    if (!msg) return std::nullopt;
    if (predictor.phase_after(*msg, c.distance / std::max(v, 1.0)) == Phase::Green) return std::nullopt;
  } else if (c.kind != cycle::ControlKind::StopSign) {
    return std::nullopt;
  }

  const double grade = mean_grade.value_or(snap.grade_here);
  // Coast down to the table's end speed, then the brake cap.
  constexpr double kCapDecel = 1.5;
  const auto coast = table.to_end(v, grade);
  if (!coast) return std::nullopt;
  // A coast that hardly decelerates (creep downhill) only costs time.
  constexpr double kMinCoastDecel = 0.2;
  const double vb = table.end_speed();
  if (*coast > 0.0 && (v * v - vb * vb) / (2.0 * *coast) < kMinCoastDecel) return std::nullopt;
  const double cd = *coast + vb * vb / (2.0 * kCapDecel);
  const double stop_at = c.distance - world::IdmParams{}.stop_s0;
  if (std::abs(stop_at - cd) > cfg.approach_window) return std::nullopt;

  SpeedPlan plan;
  plan.anchor = state.arc_position;
  plan.mode = PlanMode::EcoApproach;
  for (const auto& p : coast_profile(table.config(), v, grade, 2.0, table.end_speed())) {
    if (p.target_speed < cfg.approach_brake_speed || p.arc_offset >= stop_at - 0.5) break;
    plan.points.push_back(p);
  }
  if (plan.points.empty()) return std::nullopt;  // already at the line
  // Brake cap: hold the brake speed, then a short comfortable stop at the line.
  const auto last = plan.points.back();
  const double vcap = std::min(last.target_speed, cfg.approach_brake_speed);
  const double brake_from = stop_at - vcap * vcap / (2.0 * kCapDecel);
  if (brake_from > last.arc_offset + 0.01) plan.points.push_back({brake_from, vcap});
  const double from = plan.points.back().arc_offset;
  const double span = stop_at - from;
  constexpr int kSegments = 8;
  for (int i = 1; i < kSegments && span > 0.5; ++i) {
    const double s = from + span * i / kSegments;
    plan.points.push_back({s, std::sqrt(2.0 * kCapDecel * (stop_at - s))});
  }
  plan.points.push_back({std::max(stop_at, from + 0.01), 0.0});
  return plan;
}

}  // namespace ecosim::eco
