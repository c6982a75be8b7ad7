#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "doctest.h"
#include "ecosim/bus.hpp"
#include "ecosim/error.hpp"

using namespace ecosim;
using namespace ecosim::bus;

namespace {

ErrorCode code_of(const Bytes& b) {
  try {
    decode(b);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode succeeded");
  return ErrorCode::InvalidConfig;
}

EnvState sample_env() {
  EnvState e{120.5, 13.25, -0.5, 0.02, {}, {}};
  Obstacle o;
  o.id = 0;
  o.arc_position = 150;
  o.speed = 12;
  o.accel = 0.25;
  e.obstacles.push_back(o);
  o.id = 1;
  o.kind = ObstacleKind::Static;
  o.arc_position = 210;
  o.speed = 0;
  o.accel = 0;
  e.obstacles.push_back(o);
  e.spat.push_back({4, Phase::Yellow, 1.5, 15, 30, 7.0});
  return e;
}

// Toy components: the env echoes the plant, the planner is a P speed
// controller, the plant a point mass.
struct ToyEnv : EnvStepper {
  double arc = 0, speed = 0;
  EnvState emit_state(double) override { return {arc, speed, 0, 0, {}, {}}; }
  SpatList emit_spat(double t) override {
    return {{{0, std::fmod(t, 30.0) < 15 ? Phase::Red : Phase::Green, 1.0, 2.0, 30.0, t}}};
  }
  void consume(const VehState& v, double) override {
    arc = v.arc;
    speed = v.speed;
  }
};

struct ToyPlanner : PlannerStepper {
  int spats = 0;
  bool fail_at_5 = false;
  double t_last = 0;
  void consume_spat(const SpatList&, double) override { ++spats; }
  void consume_vehicle(const VehState&, double) override {}
  ControlCommand plan(const EnvState& e, double t) override {
    if (fail_at_5 && t > 0.09) throw Error(ErrorCode::NegativeGap, "boom");
    ControlCommand c;
    c.throttle = std::clamp((10.0 - e.speed) * 0.1, 0.0, 1.0);
    c.brake = e.speed > 10.5 ? 0.1 : 0.0;
    c.dfco_request = c.throttle == 0.0;
    t_last = t;
    return c;
  }
};

struct ToyPlant : PlantStepper {
  VehState s;
  VehState step(const ControlCommand& c, double) override {
    const double a = 2.0 * c.throttle - 5.0 * c.brake - 0.01 * s.speed;
    s.speed = std::max(0.0, s.speed + a * 0.02);
    s.arc += s.speed * 0.02;
    s.accel = a;
    s.fuel_rate = c.dfco_request ? 0.0 : 0.3 + c.throttle;
    s.fuel_total += s.fuel_rate * 0.02;
    return s;
  }
};

}  // namespace

TEST_CASE("codec round trips") {
  ControlCommand c;
  c.throttle = 0.375;
  c.brake = 0;
  c.gear_hold = 3;
  const Message m{7, 1.25, c};
  const auto b = encode(m);
  CHECK(b.size() == kHeaderSize + 18);
  CHECK(decode(b) == m);
  double back;
  std::memcpy(&back, b.data() + kHeaderSize, 8);
  CHECK(back == 0.375);
  CHECK(b[0] == 0x44);  // little-endian magic
  CHECK(b[3] == 0x49);

  const Message env{1, 3.5, sample_env()};
  auto env_back = decode(encode(env));
  auto expect = sample_env();
  for (auto& s : expect.spat) s.timestamp = 3.5;  // carried by the header
  CHECK(std::get<EnvState>(env_back.payload) == expect);

  const Message veh{2, 0.02, VehState{1, 2, 3, 4, 5, 6, 8}};
  CHECK(decode(encode(veh)) == veh);
  const Message spat{3, 0.1, SpatList{{{9, Phase::Green, 1, 2, 30, 0.1}}}};
  CHECK(decode(encode(spat)) == spat);

  // Bit patterns survive, including NaN payloads and negative zero.
  ControlCommand odd;
  odd.throttle = std::numeric_limits<double>::quiet_NaN();
  odd.brake = -0.0;
  const auto ob = encode({0, 0, odd});
  CHECK(encode(decode(ob)) == ob);
}

TEST_CASE("codec errors") {
  auto b = encode({0, 0, ControlCommand{}});
  auto bad = b;
  bad[0] = bad[1] = bad[2] = bad[3] = 0;
  CHECK(code_of(bad) == ErrorCode::BadMagic);
  bad = b;
  bad[4] = 2;
  CHECK(code_of(bad) == ErrorCode::VersionMismatch);
  bad = b;
  bad[6] = 9;
  CHECK(code_of(bad) == ErrorCode::UnknownType);
  auto env = encode({0, 0, sample_env()});
  env[20] += 1;  // payload_len larger than the buffer
  CHECK(code_of(env) == ErrorCode::TruncatedPayload);
  CHECK(code_of(Bytes(b.begin(), b.begin() + 10)) == ErrorCode::TruncatedPayload);
  bad = b;
  bad.push_back(0);
  CHECK(code_of(bad) == ErrorCode::MalformedPayload);
  bad = b;
  bad[kHeaderSize + 16] = 0x80;  // unknown flag bit
  CHECK(code_of(bad) == ErrorCode::MalformedPayload);
  // A huge obstacle count is rejected before allocating.
  auto big = encode({0, 0, EnvState{}});
  big[kHeaderSize + 32 + 3] = 0xff;
  CHECK(code_of(big) == ErrorCode::TruncatedPayload);
  ControlCommand g;
  g.gear_hold = 12;
  CHECK_THROWS_AS(encode({0, 0, g}), Error);
}

TEST_CASE("codec fuzz: typed errors only") {
  std::mt19937_64 rng(11);
  const std::vector<Bytes> seeds{encode({1, 0.5, sample_env()}), encode({2, 0.5, ControlCommand{}}),
                                 encode({3, 0.5, VehState{}}), encode({4, 0.5, SpatList{{{1, Phase::Red, 1, 2, 3, 0}}}})};
  std::size_t ok = 0, errors = 0;
  for (int i = 0; i < 20000; ++i) {
    Bytes b;
    if (i % 2 == 0) {
      b.resize(rng() % 96);
      for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    } else {
      b = seeds[rng() % seeds.size()];
      const int flips = 1 + static_cast<int>(rng() % 4);
      for (int f = 0; f < flips; ++f) b[rng() % b.size()] = static_cast<std::uint8_t>(rng());
      if (rng() % 4 == 0) b.resize(rng() % (b.size() + 1));
    }
    try {
      const auto m = decode(b);
      CHECK(encode(m) == b);
      ++ok;
    } catch (const Error&) {
      ++errors;
    }
  }
  CHECK(ok + errors == 20000);
  CHECK(ok > 0);
}

TEST_CASE("schedule arithmetic") {
  TickSchedule s;
  CHECK(s.ticks(1.0) == 50);
  CHECK(s.ticks(0) == 0);
  CHECK(s.ticks(60) == 3000);
  for (std::uint64_t n : {1u, 2u, 5u, 6u, 50u, 51u, 3000u}) {
    std::uint64_t spats = 0;
    for (std::uint64_t k = 0; k < n; ++k) spats += s.spat_tick(k);
    CHECK(spats == (n - 1) / 5 + 1);
  }
}

TEST_CASE("lockstep run") {
  ToyEnv env;
  ToyPlanner planner;
  ToyPlant plant;
  auto tr = lockstep_run(env, planner, plant, 1.0);
  CHECK(tr.ticks == 50);
  std::size_t counts[5] = {};
  for (const auto& m : tr.messages) ++counts[static_cast<int>(m.type())];
  CHECK(counts[1] == 50);
  CHECK(counts[2] == 10);
  CHECK(counts[3] == 50);
  CHECK(counts[4] == 50);
  CHECK(planner.spats == 10);
  // Stage order within a tick and strictly increasing seq per type.
  CHECK(tr.messages[0].type() == MsgType::EnvState);
  CHECK(tr.messages[1].type() == MsgType::Spat);
  CHECK(tr.messages[2].type() == MsgType::Control);
  CHECK(tr.messages[3].type() == MsgType::VehState);
  CHECK(tr.messages[3].sim_time == doctest::Approx(0.02));
  std::uint32_t last[5] = {};
  bool first[5] = {true, true, true, true, true};
  for (const auto& m : tr.messages) {
    const int k = static_cast<int>(m.type());
    if (!first[k]) CHECK(m.seq == last[k] + 1);
    first[k] = false;
    last[k] = m.seq;
  }

  ToyEnv e2;
  ToyPlanner p2;
  ToyPlant q2;
  CHECK(lockstep_run(e2, p2, q2, 1.0).serialize() == tr.serialize());

  ToyEnv e3;
  ToyPlanner p3;
  ToyPlant q3;
  CHECK(lockstep_run(e3, p3, q3, 0).messages.empty());

  ToyEnv e4;
  ToyPlanner p4;
  p4.fail_at_5 = true;
  ToyPlant q4;
  try {
    lockstep_run(e4, p4, q4, 1.0);
    FAIL("expected ComponentFault");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ComponentFault);
    CHECK(std::string(e.what()).find("tick 5") != std::string::npos);
  }

  ToyEnv e5;
  ToyPlanner p5;
  ToyPlant q5;
  RunOptions opt;
  opt.stop = [&] { return q5.s.arc > 0.5; };
  const auto stopped = lockstep_run(e5, p5, q5, 10.0, opt);
  CHECK(stopped.ticks < 500);
  CHECK(q5.s.arc > 0.5);
}

TEST_CASE("udp endpoint") {
  UdpEndpoint rx({"127.0.0.1", 0});
  UdpEndpoint tx({"127.0.0.1", 0}, rx.local());
  CHECK(rx.local().port != 0);
  std::vector<Received> got;
  for (std::uint32_t i = 0; i < 100; ++i) {
    ControlCommand c;
    c.throttle = i / 100.0;
    tx.send({i, i * 0.02, c});
    if (i % 10 == 9) {
      for (auto& r : rx.poll()) got.push_back(r);
    }
  }
  while (got.size() < 100) {
    auto more = rx.wait(1.0);
    if (more.empty()) break;
    for (auto& r : more) got.push_back(r);
  }
  REQUIRE(got.size() == 100);
  for (std::uint32_t i = 0; i < 100; ++i) {
    CHECK(got[i].msg.seq == i);
    CHECK_FALSE(got[i].gap);
  }

  // Duplicate then stale then a gap.
  const auto dup = encode({200, 0, ControlCommand{}});
  tx.send_raw(dup);
  tx.send_raw(dup);
  tx.send_raw(encode({150, 0, ControlCommand{}}));
  tx.send_raw(encode({202, 0, ControlCommand{}}));
  tx.send_raw(Bytes{1, 2, 3});
  std::vector<Received> rest;
  for (int i = 0; i < 20 && rest.size() < 2; ++i) {
    for (auto& r : rx.wait(0.2)) rest.push_back(r);
  }
  REQUIRE(rest.size() == 2);
  CHECK(rest[0].msg.seq == 200);
  CHECK(rest[1].msg.seq == 202);
  CHECK(rest[1].gap);
  CHECK(rx.counters().duplicates == 1);
  CHECK(rx.counters().stale == 1);
  CHECK(rx.counters().decode_errors == 1);

  CHECK_THROWS_AS(UdpEndpoint({"not-an-ip", 0}), Error);
  CHECK(parse_address("127.0.0.1:9000").port == 9000);
  CHECK_THROWS_AS(parse_address("127.0.0.1"), Error);
  CHECK_THROWS_AS(parse_address("127.0.0.1:70000"), Error);
}

TEST_CASE("udp run equals lockstep") {
  ToyEnv e1, e2;
  ToyPlanner p1, p2;
  ToyPlant q1, q2;
  const auto a = lockstep_run(e1, p1, q1, 2.0);
  UdpRunStats st;
  const auto b = udp_run(e2, p2, q2, 2.0, {}, &st);
  CHECK(a.vehicle_states() == b.vehicle_states());
  CHECK(a.serialize() == b.serialize());
  CHECK(st.missed_controls == 0);
  CHECK(st.planner.duplicates == 0);
}
