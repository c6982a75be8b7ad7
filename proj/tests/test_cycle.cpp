#include <random>
#include <string>

#include "doctest.h"
#include "ecosim/cycle.hpp"
#include "ecosim/error.hpp"

using namespace ecosim;
using namespace ecosim::cycle;

namespace {

const std::string kHeader = "start_m,length_m,speed_limit_mps,grade,curvature_inv_m,control\n";

ErrorCode code_of(const std::string& text) {
  try {
    parse_cycle(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidConfig;
}

}  // namespace

TEST_CASE("single row parses to one segment") {
  auto c = parse_cycle(kHeader + "0,100,13.4,0.0,0.0,none\n");
  REQUIRE(c.segments.size() == 1);
  CHECK(c.total_length() == 100.0);
  CHECK(c.segments[0].speed_limit_mps == 13.4);
  CHECK(c.segments[0].control == ControlKind::None);
}

TEST_CASE("contiguous rows sum") {
  auto c = parse_cycle(kHeader + "0,100,13.4,0,0,none\n100,80,13.4,0,0,light\n");
  CHECK(c.total_length() == 180.0);
  CHECK(c.segments[1].control == ControlKind::TrafficLight);
}

TEST_CASE("gap is rejected") {
  CHECK(code_of(kHeader + "0,100,13.4,0,0,none\n250,80,13.4,0,0,none\n") == ErrorCode::NonContiguousDistance);
}

TEST_CASE("bad rows report their line") {
  try {
    parse_cycle(kHeader + "0,100,13.4,0,0,none\n100,abc,13.4,0,0,none\n");
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedRow);
    CHECK(e.line() == 3);
  }
  CHECK(code_of(kHeader + "0,100,13.4,0,0\n") == ErrorCode::MalformedRow);
  CHECK(code_of("0,100,13.4,0,0,none\n") == ErrorCode::MalformedRow);
}

TEST_CASE("range checks") {
  CHECK(code_of(kHeader + "0,100,13.4,0.2,0,none\n") == ErrorCode::OutOfRangeField);
  CHECK(code_of(kHeader + "0,100,13.4,-0.25,0,none\n") == ErrorCode::OutOfRangeField);
  CHECK(code_of(kHeader + "0,100,0,0,0,none\n") == ErrorCode::OutOfRangeField);
  CHECK(code_of(kHeader + "0,0,10,0,0,none\n") == ErrorCode::OutOfRangeField);
  CHECK(code_of(kHeader + "0,100,10,0,0.11,none\n") == ErrorCode::OutOfRangeField);
  CHECK(code_of(kHeader + "0,100,10,0,0,yield\n") == ErrorCode::OutOfRangeField);
  CHECK_NOTHROW(parse_cycle(kHeader + "0,100,10,0.19,-0.1,turn\n"));
  CHECK(code_of(kHeader) == ErrorCode::MalformedRow);
}

TEST_CASE("comments and id") {
  auto c = parse_cycle("# id: town_loop\n# anything\n" + kHeader + "# mid\n0,50,10,0,0,stop\n");
  CHECK(c.id == "town_loop");
  CHECK(c.segments.size() == 1);
  CHECK(parse_cycle(kHeader + "0,5,1,0,0,none\n", "fallback").id == "fallback");
}

TEST_CASE("stats count lights and intersections") {
  DriveCycle c;
  c.id = "hill";
  const ControlKind kinds[] = {ControlKind::StopSign, ControlKind::TrafficLight, ControlKind::StopSign,
                               ControlKind::TrafficLight, ControlKind::StopSign, ControlKind::None};
  double s = 0;
  for (auto k : kinds) {
    c.segments.push_back({s, 1600.0 / 6, 13.4, 0, 0, k});
    s += 1600.0 / 6;
  }
  auto st = cycle_stats(c);
  CHECK(st.distance_m == doctest::Approx(1600.0));
  CHECK(st.n_traffic_lights == 2);
  CHECK(st.n_intersections == 5);

  DriveCycle plain{"p", {{0, 42, 10, 0, 0, ControlKind::None}}};
  auto ps = cycle_stats(plain);
  CHECK(ps.distance_m == 42.0);
  CHECK(ps.n_intersections == 0);
}

TEST_CASE("emit/parse round trip is exact") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    DriveCycle c;
    c.id = "rt" + std::to_string(trial);
    double s = 0;
    const int n = 1 + static_cast<int>(u(rng) * 20);
    for (int i = 0; i < n; ++i) {
      CycleSegment seg;
      seg.start_m = s;
      seg.length_m = 0.1 + u(rng) * 500;
      seg.speed_limit_mps = 1 + u(rng) * 30;
      seg.grade = (u(rng) - 0.5) * 0.39;
      seg.curvature_inv_m = (u(rng) - 0.5) * 0.2;
      seg.control = static_cast<ControlKind>(static_cast<int>(u(rng) * 4));
      c.segments.push_back(seg);
      s = seg.end_m();
    }
    auto back = parse_cycle(emit_cycle(c));
    REQUIRE(back == c);
    CHECK(cycle_stats(back).distance_m == c.segments.back().end_m());
  }
}
