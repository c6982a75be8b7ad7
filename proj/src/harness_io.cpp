#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <tuple>

#include "json.hpp"
#include "ecosim/error.hpp"
#include "ecosim/harness.hpp"
#include "ecosim/text.hpp"

namespace ecosim::harness {

using nlohmann::json;

namespace {

eco::PlanMode mode_from(std::string_view s, std::size_t line) {
  for (auto m : {eco::PlanMode::Baseline, eco::PlanMode::EcoApproach, eco::PlanMode::EcoDeparture,
                 eco::PlanMode::EcoCruise}) {
    if (eco::to_string(m) == s) return m;
  }
  throw Error(ErrorCode::MalformedRow, "unknown mode '" + std::string(s) + "'", line);
}

double number(std::string_view s, std::size_t line) {
  const auto v = text::parse_double(text::trim(s));
  if (!v) throw Error(ErrorCode::MalformedRow, "bad number '" + std::string(s) + "'", line);
  return *v;
}

double pct(double num, double den) { return den > 0.0 ? 100.0 * num / den : 0.0; }

}  // namespace

// --- CSV ---

std::string export_csv(const RunTrace& trace) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : trace.rows) {
    for (double v : {r.t, r.arc, r.speed, r.accel, r.alt, r.fuel_rate, r.fuel_total}) {
      out += text::format_shortest(v);
      out += ',';
    }
    out += std::to_string(r.gear);
    out += ',';
    out += eco::to_string(r.mode);
    out += '\n';
  }
  return out;
}

std::vector<TraceRow> parse_csv(std::string_view doc) {
  const auto ls = text::lines(doc);
  if (ls.empty() || text::trim(ls.front().content) != kCsvHeader) {
    throw Error(ErrorCode::MalformedDocument, "missing trace header", 1);
  }
  std::vector<TraceRow> rows;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto& l = ls[i];
    if (text::trim(l.content).empty()) continue;
    const auto f = text::split(l.content, ',');
    if (f.size() != 9) throw Error(ErrorCode::MalformedRow, "expected 9 fields", l.number);
    TraceRow r;
    double* dst[] = {&r.t, &r.arc, &r.speed, &r.accel, &r.alt, &r.fuel_rate, &r.fuel_total};
    for (std::size_t k = 0; k < 7; ++k) *dst[k] = number(f[k], l.number);
    const auto g = text::parse_int(text::trim(f[7]));
    if (!g || *g < 1 || *g > vdpt::kGears) throw Error(ErrorCode::MalformedRow, "bad gear", l.number);
    r.gear = static_cast<int>(*g);
    r.mode = mode_from(text::trim(f[8]), l.number);
    rows.push_back(r);
  }
  return rows;
}

std::string export_sidecar(const RunTrace& trace) {
  json j;
  j["scenario_id"] = trace.header.scenario_id;
  j["seed"] = trace.header.seed;
  j["strategy"] = trace.header.strategy;
  j["config_hashes"] = trace.header.config_hashes;
  j["route_length_m"] = trace.route_length;
  j["completed"] = trace.completed;
  j["ticks"] = trace.rows.size();
  j["time_s"] = trace.time();
  j["fuel_g"] = trace.fuel();
  j["final_arc_m"] = trace.final_arc();
  return j.dump(2) + "\n";
}

RunTrace parse_sidecar(std::string_view doc) {
  RunTrace t;
  try {
    const auto j = json::parse(doc);
    t.header.scenario_id = j.at("scenario_id").get<std::string>();
    t.header.seed = j.at("seed").get<std::uint64_t>();
    t.header.strategy = j.at("strategy").get<std::string>();
    t.header.config_hashes = j.at("config_hashes").get<std::map<std::string, std::string>>();
    t.route_length = j.at("route_length_m").get<double>();
    t.completed = j.at("completed").get<bool>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, std::string("trace sidecar: ") + e.what());
  }
  return t;
}

// --- comparison ---

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

SavingsReport compare(const std::vector<RunTrace>& baseline, const std::vector<RunTrace>& eco) {
  using Key = std::pair<std::string, std::uint64_t>;
  auto index = [](const std::vector<RunTrace>& ts, const char* what) {
    std::map<Key, const RunTrace*> m;
    for (const auto& t : ts) {
      if (!m.emplace(Key{t.header.scenario_id, t.header.seed}, &t).second) {
        throw Error(ErrorCode::UnpairedTrace, std::string("duplicate ") + what + " trace " + t.header.scenario_id);
      }
    }
    return m;
  };
  const auto b = index(baseline, "baseline");
  const auto e = index(eco, "eco");
  for (const auto& [k, _] : e) {
    if (!b.count(k)) throw Error(ErrorCode::UnpairedTrace, "eco trace without baseline: " + k.first);
  }
  SavingsReport r;
  for (const auto& [k, bt] : b) {
    const auto it = e.find(k);
    if (it == e.end()) throw Error(ErrorCode::UnpairedTrace, "baseline trace without eco: " + k.first);
    const RunTrace& et = *it->second;
    const auto bc = bt->header.config_hashes.find("cycle");
    const auto ec = et.header.config_hashes.find("cycle");
    if (bc != bt->header.config_hashes.end() && ec != et.header.config_hashes.end() && bc->second != ec->second) {
      throw Error(ErrorCode::UnpairedTrace, "cycle differs between paired traces: " + k.first);
    }
    if (!bt->completed || !et.completed) {
      ++r.excluded;
      continue;
    }
    SavingsRow row;
    row.scenario_id = k.first;
    row.seed = k.second;
    row.baseline_fuel = bt->fuel();
    row.eco_fuel = et.fuel();
    row.saving_pct = pct(row.baseline_fuel - row.eco_fuel, row.baseline_fuel);
    row.baseline_time = bt->time();
    row.eco_time = et.time();
    row.time_delta_pct = pct(row.eco_time - row.baseline_time, row.baseline_time);
    r.rows.push_back(row);
  }
  std::stable_sort(r.rows.begin(), r.rows.end(), [](const SavingsRow& x, const SavingsRow& y) {
    if (x.saving_pct != y.saving_pct) return x.saving_pct > y.saving_pct;
    return std::tie(x.scenario_id, x.seed) < std::tie(y.scenario_id, y.seed);
  });
  std::vector<double> savings;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    auto& row = r.rows[i];
    row.rank = static_cast<int>(i) + 1;
    savings.push_back(row.saving_pct);
    r.mean.baseline_fuel += row.baseline_fuel;
    r.mean.eco_fuel += row.eco_fuel;
    r.mean.saving_pct += row.saving_pct;
    r.mean.baseline_time += row.baseline_time;
    r.mean.eco_time += row.eco_time;
    r.mean.time_delta_pct += row.time_delta_pct;
  }
  r.mean.scenario_id = "mean";
  if (!r.rows.empty()) {
    const double n = static_cast<double>(r.rows.size());
    for (double* f : {&r.mean.baseline_fuel, &r.mean.eco_fuel, &r.mean.saving_pct, &r.mean.baseline_time,
                      &r.mean.eco_time, &r.mean.time_delta_pct}) {
      *f /= n;
    }
  }
  r.p50 = percentile(savings, 50);
  r.p75 = percentile(savings, 75);
  r.p95 = percentile(savings, 95);
  return r;
}

std::string format_report(const SavingsReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-4s %-16s %12s %12s %9s %12s %12s %9s\n", "rank", "scenario", "base_fuel_g",
                "eco_fuel_g", "saving%", "base_time_s", "eco_time_s", "dtime%");
  out += buf;
  auto line = [&](const SavingsRow& row, const std::string& rank) {
    std::snprintf(buf, sizeof buf, "%-4s %-16s %12.3f %12.3f %9.2f %12.2f %12.2f %9.2f\n", rank.c_str(),
                  row.scenario_id.c_str(), row.baseline_fuel, row.eco_fuel, row.saving_pct, row.baseline_time,
                  row.eco_time, row.time_delta_pct);
    out += buf;
  };
  for (const auto& row : r.rows) line(row, std::to_string(row.rank));
  line(r.mean, "-");
  std::snprintf(buf, sizeof buf, "saving percentiles: p50 %.2f%%  p75 %.2f%%  p95 %.2f%%  (excluded %zu)\n", r.p50,
                r.p75, r.p95, r.excluded);
  out += buf;
  return out;
}

std::string report_json(const SavingsReport& r) {
  auto row_json = [](const SavingsRow& row) {
    return json{{"scenario_id", row.scenario_id},     {"seed", row.seed},
                {"baseline_fuel_g", row.baseline_fuel}, {"eco_fuel_g", row.eco_fuel},
                {"saving_pct", row.saving_pct},       {"baseline_time_s", row.baseline_time},
                {"eco_time_s", row.eco_time},         {"time_delta_pct", row.time_delta_pct},
                {"rank", row.rank}};
  };
  json j;
  j["rows"] = json::array();
  for (const auto& row : r.rows) j["rows"].push_back(row_json(row));
  auto m = row_json(r.mean);
  m.erase("seed");
  m.erase("rank");
  m.erase("scenario_id");
  j["mean"] = m;
  j["percentiles"] = {{"p50", r.p50}, {"p75", r.p75}, {"p95", r.p95}};
  j["excluded"] = r.excluded;
  return j.dump(2) + "\n";
}

// --- brake calibration ---

std::vector<SpeedSample> parse_speed_trace(std::string_view doc) {
  std::vector<SpeedSample> out;
  bool header = false;
  for (const auto& l : text::lines(doc)) {
    const auto c = text::trim(l.content);
    if (c.empty() || c.front() == '#') continue;
    if (!header) {
      if (c != "t_s,speed_mps") throw Error(ErrorCode::MalformedDocument, "expected header t_s,speed_mps", l.number);
      header = true;
      continue;
    }
    const auto f = text::split(c, ',');
    if (f.size() != 2) throw Error(ErrorCode::MalformedRow, "expected 2 fields", l.number);
    SpeedSample s{number(f[0], l.number), number(f[1], l.number)};
    if (s.speed < 0.0) throw Error(ErrorCode::OutOfRangeField, "negative speed", l.number);
    if (!out.empty() && !(s.t > out.back().t)) {
      throw Error(ErrorCode::NonContiguousDistance, "time must increase", l.number);
    }
    out.push_back(s);
  }
  if (out.size() < 2) throw Error(ErrorCode::MalformedDocument, "speed trace needs at least two samples");
  return out;
}

namespace {

double speed_at(const std::vector<SpeedSample>& ref, double t) {
  if (t <= ref.front().t) return ref.front().speed;
  if (t >= ref.back().t) return ref.back().speed;
  const auto it = std::upper_bound(ref.begin(), ref.end(), t,
                                   [](double x, const SpeedSample& s) { return x < s.t; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  return a.speed + (b.speed - a.speed) * (t - a.t) / (b.t - a.t);
}

}  // namespace

double brake_tracking_rms(const vdpt::VehicleConfig& cfg, const std::vector<SpeedSample>& ref) {
  constexpr double tau = 1.0;
  vdpt::Powertrain plant(cfg, ref.front().speed);
  eco::Follower follower(cfg);
  double sq = 0.0;
  std::size_t n = 0;
  for (double t = ref.front().t; t < ref.back().t; t += vdpt::kStep) {
    const auto& s = plant.state();
    const double a_des = (speed_at(ref, t + tau) - s.speed) / tau;
    plant.step(follower.command(a_des, s, 0.0), 0.0);
    const double e = plant.state().speed - speed_at(ref, t + vdpt::kStep);
    sq += e * e;
    ++n;
  }
  return std::sqrt(sq / static_cast<double>(n));
}

BrakeCalibration calibrate_brake_gain(vdpt::VehicleConfig cfg, const std::vector<SpeedSample>& ref,
                                      const std::vector<double>& gains, double slack) {
  if (gains.empty()) throw Error(ErrorCode::InvalidConfig, "no brake gains to sweep");
  BrakeCalibration out;
  double best = INFINITY;
  for (double g : gains) {
    cfg.brake_gain = g;
    const double rms = brake_tracking_rms(cfg, ref);
    out.sweep.emplace_back(g, rms);
    best = std::min(best, rms);
  }
  auto sorted = out.sweep;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [g, rms] : sorted) {
    if (rms <= best + slack) {
      out.gain = g;
      out.rms = rms;
      break;
    }
  }
  return out;
}

}  // namespace ecosim::harness
