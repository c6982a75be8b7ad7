#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ecosim/error.hpp"
#include "ecosim/mapgen.hpp"

using namespace ecosim;
using namespace ecosim::mapgen;
using cycle::ControlKind;
using cycle::DriveCycle;

namespace {

DriveCycle make_cycle(std::initializer_list<cycle::CycleSegment> segs) {
  DriveCycle c{"t", {}};
  double s = 0;
  for (auto seg : segs) {
    seg.start_m = s;
    s += seg.length_m;
    c.segments.push_back(seg);
  }
  return c;
}

// Explicit Euler integration of the heading at 1 mm steps.
Vec2 integrate_heading(double kappa, double length) {
  const double ds = 1e-3;
  const auto n = static_cast<long>(std::llround(length / ds));
  double x = 0, y = 0;
  for (long i = 0; i < n; ++i) {
    const double th = kappa * (i + 0.5) * ds;
    x += std::cos(th) * ds;
    y += std::sin(th) * ds;
  }
  return {x, y};
}

DriveCycle random_cycle(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DriveCycle c{"rnd", {}};
  double s = 0;
  const int n = 1 + static_cast<int>(u(rng) * 12);
  for (int i = 0; i < n; ++i) {
    cycle::CycleSegment seg{s, 5 + u(rng) * 300, 5 + u(rng) * 20, (u(rng) - 0.5) * 0.16,
                            (u(rng) - 0.5) * 0.04, static_cast<ControlKind>(static_cast<int>(u(rng) * 4))};
    c.segments.push_back(seg);
    s = seg.end_m();
  }
  return c;
}

}  // namespace

TEST_CASE("straight edge endpoint") {
  auto m = realize_geometry(make_cycle({{0, 30, 10, 0, 0, ControlKind::None}}));
  REQUIRE(m.edges.size() == 1);
  CHECK(m.edges[0].end_point().x == doctest::Approx(30.0));
  CHECK(m.edges[0].end_point().y == doctest::Approx(0.0));
  CHECK(m.edges[0].heading_at(30) == 0.0);
}

TEST_CASE("quarter circle endpoint matches closed form and numeric integration") {
  const double L = 50 * std::numbers::pi;  // 157.0796...
  auto m = realize_geometry(make_cycle({{0, L, 10, 0, 0.01, ControlKind::None}}));
  const auto end = m.edges[0].end_point();
  CHECK(end.x == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(end.y == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(m.edges[0].heading_at(L) == doctest::Approx(std::numbers::pi / 2));
  const auto num = integrate_heading(0.01, L);
  CHECK(std::abs(num.x - end.x) < 1e-3);
  CHECK(std::abs(num.y - end.y) < 1e-3);
}

TEST_CASE("edges chain and controllers sit at segment ends") {
  auto m = realize_geometry(make_cycle({{0, 100, 10, 0, 0, ControlKind::Turn},
                                        {0, 80, 10, 0, 0, ControlKind::TrafficLight}}));
  CHECK(m.edges[1].origin == Vec2{100, 0});
  REQUIRE(m.controllers.size() == 2);
  CHECK(m.controllers[1].edge_index == 1);
  CHECK(m.controllers[1].offset_m == 80.0);
  CHECK(m.total_length() == 180.0);
}

TEST_CASE("continuity invariants on random maps") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    auto m = realize_geometry(random_cycle(rng));
    for (std::size_t i = 0; i + 1 < m.edges.size(); ++i) {
      CHECK(distance(m.edges[i].end_point(), m.edges[i + 1].origin) <= 1e-6);
      CHECK(std::abs(m.edges[i].heading_at(m.edges[i].length) - m.edges[i + 1].heading) <= 1e-9);
    }
  }
}

TEST_CASE("tiling") {
  auto m = realize_geometry(make_cycle({{0, 30, 10, 0, 0, ControlKind::None}}));
  auto w = emit_waypoint_map(m, 3.0);
  REQUIRE(w.waypoints.size() == 11);
  for (int i = 0; i <= 10; ++i) CHECK(w.waypoints[i].position.x == doctest::Approx(3.0 * i));

  auto m10 = realize_geometry(make_cycle({{0, 10, 10, 0, 0, ControlKind::None}}));
  CHECK(tile_count(10, 3) == 4);
  auto w10 = emit_waypoint_map(m10, 3.0);
  REQUIRE(w10.waypoints.size() == 5);
  for (std::size_t i = 1; i < w10.waypoints.size(); ++i)
    CHECK(distance(w10.waypoints[i].position, w10.waypoints[i - 1].position) == doctest::Approx(2.5));
  for (auto& wp : w10.waypoints) CHECK(wp.lane_width > 0);
}

TEST_CASE("altitude is the grade integral") {
  auto m = realize_geometry(make_cycle({{0, 100, 10, 0, 0, ControlKind::None},
                                        {0, 200, 10, 0.05, 0, ControlKind::None}}));
  auto w = emit_waypoint_map(m);
  CHECK(std::abs(w.waypoints.back().altitude - 10.0) < 1e-6);
  CHECK(std::abs(altitude_at(m, 300) - 10.0) < 1e-9);
  CHECK(std::abs(altitude_at(m, 150) - 2.5) < 1e-9);
}

TEST_CASE("consistency: self, perturbed, and chord bound") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    auto c = random_cycle(rng);
    auto m = realize_geometry(c);
    double kmax = 0;
    for (auto& e : m.edges) kmax = std::max(kmax, std::abs(e.curvature));
    for (double tile : {3.0, 1.0}) {
      auto w = emit_waypoint_map(m, tile);
      auto r = check_consistency(m, w);
      CHECK(r.pass);
      CHECK(r.max_position_error <= kmax * tile * tile / 8 + 1e-9);
      CHECK(r.max_position_error < 1e-6);
      std::size_t n_ctrl = 0;
      for (auto& s : c.segments) n_ctrl += s.control != ControlKind::None;
      CHECK(w.checkpoints.size() == n_ctrl);
      CHECK(m.controllers.size() == n_ctrl);
    }
  }
  auto m = realize_geometry(make_cycle({{0, 90, 10, 0, 0, ControlKind::None}}));
  auto w = emit_waypoint_map(m);
  w.waypoints[7].position.y += 1.0;
  auto r = check_consistency(m, w);
  CHECK_FALSE(r.pass);
  CHECK(r.max_position_error == doctest::Approx(1.0));
}

TEST_CASE("length mismatch is detected") {
  auto m = realize_geometry(make_cycle({{0, 90, 10, 0, 0, ControlKind::None}}));
  auto w = emit_waypoint_map(m);
  auto longer = m;
  longer.edges[0].length = 93.5;
  CHECK_THROWS_AS(check_consistency(longer, w), Error);
}

TEST_CASE("file round trips") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    auto m = realize_geometry(random_cycle(rng));
    auto back = parse_edge_file(emit_edge_file(m));
    REQUIRE(back.edges.size() == m.edges.size());
    for (std::size_t i = 0; i < m.edges.size(); ++i) {
      CHECK(back.edges[i].length == doctest::Approx(m.edges[i].length).epsilon(1e-8));
      CHECK(back.edges[i].curvature == doctest::Approx(m.edges[i].curvature).epsilon(1e-8));
    }
    REQUIRE(back.controllers.size() == m.controllers.size());
    for (std::size_t i = 0; i < m.controllers.size(); ++i) {
      CHECK(back.controllers[i].edge_index == m.controllers[i].edge_index);
      CHECK(back.controllers[i].kind == m.controllers[i].kind);
      CHECK(back.controllers[i].offset_m == doctest::Approx(m.controllers[i].offset_m).epsilon(1e-8));
    }
    auto w = emit_waypoint_map(m);
    auto wb = parse_waypoint_file(emit_waypoint_file(w));
    REQUIRE(wb.waypoints.size() == w.waypoints.size());
    CHECK(wb.checkpoints == w.checkpoints);
    CHECK(check_consistency(back, wb).pass);
    // Emitting the reparsed map is a fixed point.
    CHECK(emit_edge_file(back) == emit_edge_file(m));
    CHECK(emit_waypoint_file(wb) == emit_waypoint_file(w));
  }
}

TEST_CASE("malformed files") {
  auto code = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidConfig;
  };
  CHECK(code([] { parse_edge_file("EDGEMAP v1\n"); }) == ErrorCode::MalformedDocument);
  CHECK(code([] { parse_edge_file("EDGEMAP v1\n0 nan 0 10 0 10 0\n"); }) == ErrorCode::OutOfRangeField);
  CHECK(code([] { parse_edge_file("WRONG\n"); }) == ErrorCode::MalformedDocument);
  CHECK(code([] { parse_edge_file("EDGEMAP v1\n0 0 0 10 0 10\n"); }) == ErrorCode::MalformedDocument);
  CHECK(code([] { parse_waypoint_file("WPMAP v1\nTILE 3\n0 0 0 3.5\n"); }) == ErrorCode::MalformedDocument);
}
