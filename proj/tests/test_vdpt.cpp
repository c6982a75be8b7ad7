#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "ecosim/error.hpp"
#include "ecosim/vdpt.hpp"

using namespace ecosim;
using namespace ecosim::vdpt;

namespace {

ErrorCode load_error(const std::string& doc) {
  try {
    load_vehicle_config(doc);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidConfig;
}

std::string without_section(std::string doc, const std::string& name) {
  const auto pos = doc.find("[" + name + "]");
  const auto next = doc.find("\n[", pos + 1);
  return doc.erase(pos, next == std::string::npos ? std::string::npos : next + 1 - pos);
}

// Road-load coast-down integrated with RK4 at 1 ms.
double reference_coast(const VehicleConfig& cfg, int gear, double v0) {
  const double m = effective_mass(cfg, gear);
  auto accel = [&](double v) { return v <= 0 ? 0.0 : -road_load(cfg, v, 0.0).total() / m; };
  const double h = 1e-3;
  double v = v0, x = 0;
  while (v > 0) {
    const double k1 = accel(v);
    const double k2 = accel(v + 0.5 * h * k1);
    const double k3 = accel(v + 0.5 * h * k2);
    const double k4 = accel(v + h * k3);
    const double dv = h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (v + dv <= 0) {
      // Final partial step at the current deceleration.
      x += v * v / (2 * -k1);
      break;
    }
    x += h * (v + 0.5 * dv);
    v += dv;
  }
  return x;
}

}  // namespace

TEST_CASE("default config loads and validates") {
  const auto& cfg = default_vehicle_config();
  CHECK_NOTHROW(validate(cfg));
  CHECK(cfg.mass == 1850.0);
  CHECK(cfg.converter.k_factor.front() == 130.0);
  CHECK(cfg.engine.max_torque.values.size() == cfg.engine.max_torque.axis.size());
  for (int g = 1; g <= kGears; ++g) CHECK(effective_mass(cfg, g) > cfg.mass);
}

TEST_CASE("config errors") {
  const std::string doc(default_vehicle_config_text());
  CHECK(load_error(without_section(doc, "engine.fuel")) == ErrorCode::MissingTable);
  std::string bad = doc;
  const auto pos = bad.find("speed = 78.5398163, 104.719755");
  bad.replace(pos, 30, "speed = 104.719755, 78.5398163");
  CHECK(load_error(bad) == ErrorCode::NonMonotoneAxis);
}

TEST_CASE("engine") {
  const auto& cfg = default_vehicle_config();
  for (double th : {0.0, 0.5, 1.0}) {
    CHECK(engine_step(cfg, th, 200, {.dfco = true}).fuel_rate == 0.0);
    CHECK(engine_step(cfg, th, 200, {.shutoff = true}).fuel_rate == 0.0);
  }
  const auto idle = engine_step(cfg, 0.0, cfg.idle_speed, {});
  CHECK(idle.fuel_rate == doctest::Approx(cfg.engine.fuel_rate.at(cfg.idle_speed, 0.0)));
  CHECK(idle.fuel_rate > 0);
  CHECK(engine_step(cfg, 1.0, 300, {}).torque == doctest::Approx(cfg.engine.max_torque.at(300)));
  const auto full = engine_step(cfg, 0.6, 300, {});
  CHECK(engine_step(cfg, 0.6, 300, {.cyl_deact = true}).fuel_rate ==
        doctest::Approx(full.fuel_rate * cfg.cyl_deact_fuel_scale));
  CHECK(engine_step(cfg, 0.0, 200, {.dfco = true}).torque == doctest::Approx(-motoring_torque(cfg, 200)));
  // Governor lifts a sagging engine.
  CHECK(engine_step(cfg, 0.0, cfg.idle_speed - 5, {}).torque > 0);
  Diagnostics d;
  engine_step(cfg, 1.0, 1000, {}, 0, &d);
  CHECK(d.clamp_events > 0);
}

TEST_CASE("converter") {
  const auto& conv = default_vehicle_config().converter;
  auto locked = converter_step(conv, 200, 200, true, 200);
  CHECK(locked.turbine_torque == 200);
  auto sr1 = converter_step(conv, 150, 150, false);
  CHECK(sr1.turbine_torque == doctest::Approx(sr1.impeller_torque));
  const double w2000 = 2000 * 2 * M_PI / 60;
  auto stall = converter_step(conv, w2000, 0, false);
  CHECK(stall.impeller_torque == doctest::Approx(236.686).epsilon(1e-4));
  CHECK(stall.turbine_torque == doctest::Approx(2.1 * 236.686).epsilon(1e-4));
  CHECK(converter_step(conv, 0, 0, false).impeller_torque == 0.0);
  // Overrun reverses the torque direction.
  CHECK(converter_step(conv, 80, 120, false).turbine_torque < 0);
}

TEST_CASE("transmission") {
  const auto& cfg = default_vehicle_config();
  for (double th : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double up = cfg.shift.upshift_speed(1, th);
    CHECK(transmission_step(cfg, 1, 10, up - 0.01, th).new_gear == 1);
    CHECK(transmission_step(cfg, 1, 10, up, th).new_gear == 1);  // strict inequality
    CHECK(transmission_step(cfg, 1, 10, up + 0.01, th).new_gear == 2);
    const double mid = 0.5 * (cfg.shift.downshift_speed(3, th) + cfg.shift.upshift_speed(3, th));
    CHECK(transmission_step(cfg, 3, 10, mid, th).new_gear == 3);
  }
  CHECK(transmission_step(cfg, 2, 100, 5, 0.5).output_torque == doctest::Approx(297.0));
  CHECK(transmission_step(cfg, 1, 0, 50, 0).new_gear == 2);  // one gear per step
}

TEST_CASE("body") {
  const auto& cfg = default_vehicle_config();
  VehicleState rest;
  auto s = body_step(cfg, rest, 0, 0, 0);
  CHECK(s.speed == 0);
  CHECK(s.accel == 0);
  CHECK(s.arc_position == 0);
  CHECK(road_load(cfg, 30, 0).aero == doctest::Approx(397.44));
  CHECK(road_load(cfg, 30, 0).grade == 0.0);
  CHECK(road_load(cfg, 0, 0).rolling == 0.0);
  VehicleState slow;
  slow.speed = 0.05;
  CHECK(body_step(cfg, slow, 0, 1.0, 0).speed == 0.0);
}

TEST_CASE("fuel integration") {
  PowertrainState p;
  p.fuel_rate = 1.0;
  double sum = 0;
  for (int i = 0; i < 500; ++i) sum += fuel_integrate(p, kStep);
  CHECK(p.fuel_total == doctest::Approx(10.0));
  CHECK(sum == doctest::Approx(10.0));
}

TEST_CASE("coast-down matches the fine reference") {
  const auto& cfg = default_vehicle_config();
  VehicleState s;
  s.speed = 30;
  s.powertrain.gear = 8;
  double prev_v = s.speed;
  while (s.speed > 0) {
    s = body_step(cfg, s, 0, 0, 0);
    CHECK(s.speed <= prev_v);
    prev_v = s.speed;
  }
  const double ref = reference_coast(cfg, 8, 30);
  CHECK(std::abs(s.arc_position - ref) / ref < 0.005);
}

TEST_CASE("powertrain invariants on random traces") {
  const auto& cfg = default_vehicle_config();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trace = 0; trace < 60; ++trace) {
    Powertrain p(cfg, u(rng) * 25);
    for (int k = 0; k < 500; ++k) {
      ControlCommand c;
      const double r = u(rng);
      if (r < 0.4) {
        c.throttle = u(rng);
      } else if (r < 0.7) {
        c.brake = u(rng);
      } else {
        c.dfco_request = true;
      }
      const double before = p.state().powertrain.fuel_total;
      const double x_before = p.state().arc_position;
      const auto& s = p.step(c, (u(rng) - 0.5) * 0.12);
      CHECK(s.powertrain.fuel_total >= before);
      CHECK(s.arc_position >= x_before);
      CHECK(s.speed >= 0);
      CHECK(s.powertrain.engine_speed >= 0);
      if (s.powertrain.dfco_active) CHECK(s.powertrain.fuel_rate == 0.0);
    }
  }
}

TEST_CASE("coasting cuts fuel and the plant is deterministic") {
  const auto& cfg = default_vehicle_config();
  Powertrain a(cfg, 20), b(cfg, 20);
  ControlCommand coast;
  coast.dfco_request = true;
  for (int k = 0; k < 300; ++k) {
    a.step(coast, -0.02);
    b.step(coast, -0.02);
    REQUIRE(a.state() == b.state());
  }
  CHECK(a.state().powertrain.fuel_total == 0.0);
  CHECK(a.state().powertrain.dfco_active);
}

TEST_CASE("launch and gear hold") {
  const auto& cfg = default_vehicle_config();
  Powertrain p(cfg);
  ControlCommand c;
  c.throttle = 0.5;
  int max_gear = 1;
  for (int k = 0; k < 1000; ++k) max_gear = std::max(max_gear, p.step(c, 0).powertrain.gear);
  CHECK(p.state().speed > 15);
  CHECK(max_gear >= 4);
  c.gear_hold = 2;
  p.step(c, 0);
  CHECK(p.state().powertrain.gear == 2);
}
