#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ecosim/error.hpp"
#include "ecosim/harness.hpp"
#include "ecosim/mapgen.hpp"
#include "ecosim/text.hpp"

using namespace ecosim;
using namespace ecosim::harness;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidConfig;
}

world::ScenarioConfig scenario(bool traffic) {
  auto sc = world::parse_scenario_config(world::default_scenario_config_text());
  sc.traffic = traffic;
  return sc;
}

eco::StrategyConfig eco_strategy() { return eco::parse_strategy_config(eco::default_strategy_config_text()); }

RunTrace synthetic(const std::string& id, std::uint64_t seed, double fuel, double time, bool completed = true) {
  RunTrace t;
  t.header.scenario_id = id;
  t.header.seed = seed;
  t.header.config_hashes["cycle"] = fingerprint(id);
  t.route_length = 100.0;
  t.completed = completed;
  TraceRow r;
  r.t = time;
  r.arc = completed ? 100.0 : 50.0;
  r.fuel_total = fuel;
  t.rows.push_back(r);
  return t;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string data_dir() {
  const char* d = std::getenv("ECOSIM_DATA_DIR");
  return d ? d : "data";
}

}  // namespace

TEST_CASE("suite: deterministic and within the target bands") {
  const auto a = generate_suite(1);
  const auto b = generate_suite(1);
  REQUIRE(a.size() == 20);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(cycle::emit_cycle(a[i]) == cycle::emit_cycle(b[i]));
  CHECK(cycle::emit_cycle(generate_suite(2)[0]) != cycle::emit_cycle(a[0]));

  const auto spec = default_suite_spec();
  for (int k = 0; k < 2; ++k) {
    const auto& cls = k == 0 ? spec.short_trips : spec.long_trips;
    double dist = 0.0;
    for (int i = 0; i < 10; ++i) {
      const auto& c = a[static_cast<std::size_t>(k * 10 + i)];
      CHECK(c.id.rfind(cls.prefix + "_", 0) == 0);
      const auto st = cycle::cycle_stats(c);
      dist += st.distance_m / 1000.0;
      CHECK(st.distance_m / 1000.0 >= cls.distance_km.lo);
      CHECK(st.distance_m / 1000.0 <= cls.distance_km.hi);
      CHECK(st.n_traffic_lights >= cls.lights.lo);
      CHECK(st.n_traffic_lights <= cls.lights.hi);
      CHECK(st.n_intersections >= cls.intersections.lo);
      CHECK(st.n_intersections <= cls.intersections.hi);
      for (const auto& s : c.segments) {
        CHECK(std::abs(s.grade) <= spec.max_grade);
        const bool listed = std::find(cls.limits.begin(), cls.limits.end(), s.speed_limit_mps) != cls.limits.end();
        CHECK((listed || s.speed_limit_mps == 6.0));
      }
    }
    CHECK(std::abs(dist / 10.0 - cls.distance_km.mean) <= 0.15 * cls.distance_km.mean);
  }
}

TEST_CASE("suite: maps pass the consistency check") {
  for (const auto& c : generate_suite(3)) {
    const auto em = mapgen::realize_geometry(c);
    const auto rep = mapgen::check_consistency(em, mapgen::emit_waypoint_map(em));
    CHECK(rep.pass);
    CHECK(rep.max_position_error <= 0.5);
  }
}

TEST_CASE("suite: contradictory bands are infeasible") {
  auto spec = default_suite_spec();
  spec.short_trips.lights = {5, 8, 6};
  spec.short_trips.intersections = {1, 4, 2};
  CHECK(code_of([&] { generate_suite(1, spec); }) == ErrorCode::SpecInfeasible);

  spec = default_suite_spec();
  spec.short_trips.distance_km = {1.5, 2.0, 2.5};
  CHECK(code_of([&] { generate_suite(1, spec); }) == ErrorCode::SpecInfeasible);

  spec = default_suite_spec();
  spec.short_trips.distance_km = {0.2, 0.3, 0.25};
  CHECK(code_of([&] { generate_suite(1, spec); }) == ErrorCode::SpecInfeasible);

  spec = default_suite_spec();
  spec.long_trips.limits.clear();
  CHECK(code_of([&] { generate_suite(1, spec); }) == ErrorCode::SpecInfeasible);
}

TEST_CASE("hill cycle") {
  const auto c = hill_cycle();
  const auto st = cycle::cycle_stats(c);
  CHECK(st.distance_m == doctest::Approx(1600));
  CHECK(st.n_traffic_lights == 2);
  CHECK(st.n_intersections == 5);
  const auto em = mapgen::realize_geometry(c);
  CHECK(mapgen::altitude_at(em, 1600) == doctest::Approx(17.0).epsilon(1e-9));
  CHECK(free_flow_time(c) == doctest::Approx(1600 / 13.4));
}

TEST_CASE("run: reaches the route end, deterministic, traffic costs fuel and time") {
  const auto c = hill_cycle();
  const auto base = baseline_strategy(eco_strategy());
  const auto free = run_scenario(c, scenario(false), base);
  const auto again = run_scenario(c, scenario(false), base);
  CHECK(free.completed);
  CHECK(free.final_arc() >= free.route_length);
  CHECK(free.final_arc() - free.route_length <= 0.5);
  CHECK(free.rows.back().alt == doctest::Approx(17.0).epsilon(1e-6));
  CHECK(export_csv(free) == export_csv(again));
  CHECK(free.rows.front().t == doctest::Approx(0.02));
  for (std::size_t i = 1; i < free.rows.size(); ++i) {
    CHECK(free.rows[i].fuel_total >= free.rows[i - 1].fuel_total);
  }

  const auto busy = run_scenario(c, scenario(true), base);
  CHECK(busy.completed);
  CHECK(busy.fuel() > free.fuel());
  CHECK(busy.time() >= free.time());
}

TEST_CASE("run: lockstep and udp produce the same trace") {
  cycle::DriveCycle c;
  c.id = "short_run";
  c.segments.push_back({0, 250, 13.4, 0.01, 0.0, cycle::ControlKind::StopSign});
  c.segments.push_back({250, 150, 13.4, 0.0, 0.0, cycle::ControlKind::None});
  RunOptions lock, udp;
  lock.bus = BusMode::Lockstep;
  udp.bus = BusMode::Udp;
  const auto a = run_scenario(c, scenario(true), eco_strategy(), vdpt::default_vehicle_config(), lock);
  const auto b = run_scenario(c, scenario(true), eco_strategy(), vdpt::default_vehicle_config(), udp);
  CHECK(a.rows == b.rows);
}

TEST_CASE("run: single red light, eco-approach saves fuel") {
  cycle::DriveCycle c;
  c.id = "single_red";
  c.segments.push_back({0, 400, 15.6, 0.0, 0.0, cycle::ControlKind::TrafficLight});
  c.segments.push_back({400, 300, 15.6, 0.0, 0.0, cycle::ControlKind::None});
  auto sc = scenario(false);
  sc.light_overrides[0] = {world::SpatCycle{60, 13, 2}, 0.0};
  const auto base = run_scenario(c, sc, baseline_strategy(eco_strategy()));
  auto s = eco_strategy();
  s.departure = s.cruise = false;
  const auto eco = run_scenario(c, sc, s);
  CHECK(eco.fuel() < base.fuel());
  CHECK(eco.time() <= 1.10 * base.time());
  CHECK(std::any_of(eco.rows.begin(), eco.rows.end(),
                    [](const TraceRow& r) { return r.mode == eco::PlanMode::EcoApproach; }));
}

TEST_CASE("run: timeout") {
  RunOptions o;
  o.timeout_s = 1.0;
  CHECK(code_of([&] { run_scenario(hill_cycle(), scenario(false), eco_strategy(), vdpt::default_vehicle_config(), o); }) ==
        ErrorCode::Timeout);
}

TEST_CASE("csv export and parse") {
  RunTrace empty;
  CHECK(export_csv(empty) == std::string(kCsvHeader) + "\n");
  CHECK(parse_csv(export_csv(empty)).empty());

  RunTrace t;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  double fuel = 0.0;
  for (int k = 0; k < 50; ++k) {
    TraceRow r;
    r.t = (k + 1) * 0.02;
    r.arc = u(rng) * 10;
    r.speed = u(rng);
    r.accel = u(rng) / 10 - 1.5;
    r.alt = u(rng) - 15;
    r.fuel_rate = u(rng) / 7;
    fuel += r.fuel_rate * 0.02;
    r.fuel_total = fuel;
    r.gear = 1 + k % 8;
    r.mode = static_cast<eco::PlanMode>(k % 4);
    t.rows.push_back(r);
  }
  const auto csv = export_csv(t);
  CHECK(text::lines(csv).size() == 51);
  CHECK(parse_csv(csv) == t.rows);  // exact round trip

  CHECK(code_of([] { parse_csv("t,arc\n"); }) == ErrorCode::MalformedDocument);
  CHECK(code_of([] { parse_csv(std::string(kCsvHeader) + "\n0.02,1,2\n"); }) == ErrorCode::MalformedRow);
}

TEST_CASE("sidecar round trip") {
  auto t = synthetic("short_03", 42, 12.5, 33.0);
  t.header.strategy = "baseline";
  t.header.config_hashes["vehicle"] = fingerprint("v");
  const auto back = parse_sidecar(export_sidecar(t));
  CHECK(back.header == t.header);
  CHECK(back.route_length == t.route_length);
  CHECK(back.completed == t.completed);
  CHECK(code_of([] { parse_sidecar("{"); }) == ErrorCode::MalformedDocument);
}

TEST_CASE("fingerprint") {
  CHECK(fingerprint("") == "cbf29ce484222325");
  CHECK(fingerprint("a") == "af63dc4c8601ec8c");
}

TEST_CASE("compare: savings, ranking and percentiles") {
  SUBCASE("identical traces save nothing") {
    const auto r = compare({synthetic("a", 1, 50, 100)}, {synthetic("a", 1, 50, 100)});
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].saving_pct == 0.0);
    CHECK(r.rows[0].time_delta_pct == 0.0);
  }
  SUBCASE("100 g vs 90 g") {
    const auto r = compare({synthetic("a", 1, 100, 100)}, {synthetic("a", 1, 90, 110)});
    CHECK(r.rows[0].saving_pct == doctest::Approx(10.0));
    CHECK(r.rows[0].time_delta_pct == doctest::Approx(10.0));
    CHECK(r.rows[0].rank == 1);
  }
  SUBCASE("20 pairs against an independent sort") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(50.0, 150.0);
    std::vector<RunTrace> base, eco;
    std::vector<std::pair<double, std::string>> expect;
    for (int i = 0; i < 20; ++i) {
      const std::string id = "c" + std::to_string(100 + i);
      const double b = u(rng), e = u(rng);
      base.push_back(synthetic(id, 5, b, 60));
      eco.push_back(synthetic(id, 5, e, 60));
      expect.emplace_back(100.0 * (b - e) / b, id);
    }
    std::reverse(eco.begin(), eco.end());
    std::sort(expect.begin(), expect.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    const auto r = compare(base, eco);
    REQUIRE(r.rows.size() == 20);
    double sum = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(r.rows[i].scenario_id == expect[i].second);
      CHECK(r.rows[i].saving_pct == doctest::Approx(expect[i].first));
      CHECK(r.rows[i].rank == static_cast<int>(i) + 1);
      sum += expect[i].first;
    }
    CHECK(r.mean.saving_pct == doctest::Approx(sum / 20));
    // Linear interpolation on the ascending order: p50 between the 10th and 11th.
    std::vector<double> asc;
    for (const auto& e : expect) asc.push_back(e.first);
    std::sort(asc.begin(), asc.end());
    CHECK(r.p50 == doctest::Approx(0.5 * (asc[9] + asc[10])));
    CHECK(r.p95 == doctest::Approx(asc[18] + 0.05 * (asc[19] - asc[18])));
  }
  SUBCASE("incomplete pairs are excluded") {
    const auto r = compare({synthetic("a", 1, 100, 100), synthetic("b", 1, 100, 100)},
                           {synthetic("a", 1, 90, 100), synthetic("b", 1, 90, 100, false)});
    CHECK(r.rows.size() == 1);
    CHECK(r.excluded == 1);
  }
}

TEST_CASE("compare: unpaired traces") {
  CHECK(code_of([] { compare({synthetic("a", 1, 1, 1)}, {synthetic("b", 1, 1, 1)}); }) == ErrorCode::UnpairedTrace);
  CHECK(code_of([] { compare({synthetic("a", 1, 1, 1)}, {synthetic("a", 2, 1, 1)}); }) == ErrorCode::UnpairedTrace);
  CHECK(code_of([] { compare({synthetic("a", 1, 1, 1), synthetic("a", 1, 1, 1)}, {synthetic("a", 1, 1, 1)}); }) ==
        ErrorCode::UnpairedTrace);
  auto other_map = synthetic("a", 1, 1, 1);
  other_map.header.config_hashes["cycle"] = fingerprint("different");
  CHECK(code_of([&] { compare({synthetic("a", 1, 1, 1)}, {other_map}); }) == ErrorCode::UnpairedTrace);
}

TEST_CASE("percentile") {
  CHECK(percentile({3, 1, 2}, 50) == 2.0);
  CHECK(percentile({1, 2}, 75) == doctest::Approx(1.75));
  CHECK(percentile({4}, 95) == 4.0);
}

TEST_CASE("brake gain calibration on the urban excerpt") {
  const auto ref = parse_speed_trace(read_file(data_dir() + "/urban_excerpt.csv"));
  CHECK(ref.size() > 300);
  const auto cal = calibrate_brake_gain(vdpt::default_vehicle_config(), ref, {1000, 2000, 4000, 9000});
  CHECK(cal.sweep.size() == 4);
  CHECK(cal.rms < 0.25);
  // Too little brake authority cannot follow the decelerations.
  CHECK(cal.sweep.front().second > cal.rms);
  CHECK(cal.gain <= vdpt::default_vehicle_config().brake_gain);
  CHECK(code_of([] { parse_speed_trace("t_s,speed_mps\n1,2\n1,3\n"); }) == ErrorCode::NonContiguousDistance);
}
