#include <cmath>
#include <exception>
#include <string>

#include "ecosim/bus.hpp"
#include "ecosim/error.hpp"

namespace ecosim::bus {

std::uint64_t TickSchedule::ticks(double duration) const {
  if (!(duration > 0.0)) return 0;
  return static_cast<std::uint64_t>(std::floor(duration / base_period + 1e-9));
}

Bytes Trace::serialize() const {
  Bytes out;
  for (const auto& m : messages) {
    const auto b = encode(m);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

std::vector<VehState> Trace::vehicle_states() const {
  std::vector<VehState> out;
  for (const auto& m : messages) {
    if (const auto* v = std::get_if<VehState>(&m.payload)) out.push_back(*v);
  }
  return out;
}

namespace {

template <class F>
auto guarded(std::uint64_t k, const char* who, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ComponentFault, "tick " + std::to_string(k) + ": " + who + ": " + e.what());
  }
}

struct Seqs {
  std::uint32_t env = 0;
  std::uint32_t spat = 0;
  std::uint32_t control = 0;
  std::uint32_t veh = 0;
};

}  // namespace

Trace lockstep_run(EnvStepper& env, PlannerStepper& planner, PlantStepper& plant, double duration,
                   const RunOptions& opt) {
  Trace tr;
  Seqs seq;
  const double dt = opt.schedule.base_period;
  const auto n = opt.schedule.ticks(duration);
  // Every message crosses the codec, exactly as on the wire.
  auto wire = [&](Message m) {
    auto d = decode(encode(m));
    if (opt.record) tr.messages.push_back(d);
    return d;
  };
  for (std::uint64_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const auto env_msg = guarded(k, "env", [&] { return wire({seq.env++, t, env.emit_state(t)}); });
    std::optional<Message> spat_msg;
    if (opt.schedule.spat_tick(k)) {
      spat_msg = guarded(k, "env", [&] { return wire({seq.spat++, t, env.emit_spat(t)}); });
    }
    const auto ctl = guarded(k, "planner", [&] {
      if (spat_msg) planner.consume_spat(std::get<SpatList>(spat_msg->payload), t);
      return wire({seq.control++, t, planner.plan(std::get<EnvState>(env_msg.payload), t)});
    });
    const double t1 = static_cast<double>(k + 1) * dt;
    const auto veh = guarded(k, "plant", [&] {
      return wire({seq.veh++, t1, plant.step(std::get<ControlCommand>(ctl.payload), t)});
    });
    const auto& v = std::get<VehState>(veh.payload);
    guarded(k, "planner", [&] { planner.consume_vehicle(v, t1); });
    guarded(k, "env", [&] { env.consume(v, t1); });
    ++tr.ticks;
    if (opt.stop && opt.stop()) break;
  }
  return tr;
}

Trace udp_run(EnvStepper& env, PlannerStepper& planner, PlantStepper& plant, double duration, const RunOptions& opt,
              UdpRunStats* stats, double wait_s) {
  UdpEndpoint e_env({"127.0.0.1", 0});
  UdpEndpoint e_planner({"127.0.0.1", 0});
  UdpEndpoint e_plant({"127.0.0.1", 0});
  e_env.set_peer(e_planner.local());
  e_planner.set_peer(e_plant.local());

  Trace tr;
  Seqs seq;
  UdpRunStats st;
  const double dt = opt.schedule.base_period;
  const auto n = opt.schedule.ticks(duration);
  std::optional<ControlCommand> last_control;

  // Collects messages of the wanted types from an endpoint for this tick.
  auto collect = [&](UdpEndpoint& ep, std::uint64_t k, std::vector<MsgType> want, const char* who) {
    std::vector<Message> got;
    while (!want.empty()) {
      auto batch = ep.wait(wait_s);
      if (batch.empty()) break;
      for (auto& r : batch) {
        for (auto it = want.begin(); it != want.end(); ++it) {
          if (*it == r.msg.type()) {
            got.push_back(std::move(r.msg));
            want.erase(it);
            break;
          }
        }
      }
    }
    if (!want.empty() && std::string(who) != "plant") {
      throw Error(ErrorCode::Timeout, "tick " + std::to_string(k) + ": " + who + " missed " +
                                          std::string(to_string(want.front())));
    }
    return got;
  };
  auto find = [](std::vector<Message>& v, MsgType t) -> Message* {
    for (auto& m : v) {
      if (m.type() == t) return &m;
    }
    return nullptr;
  };

  for (std::uint64_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double t1 = static_cast<double>(k + 1) * dt;
    const bool spat_tick = opt.schedule.spat_tick(k);
    guarded(k, "env", [&] {
      e_env.send({seq.env++, t, env.emit_state(t)});
      if (spat_tick) e_env.send({seq.spat++, t, env.emit_spat(t)});
    });
    std::vector<MsgType> want{MsgType::EnvState};
    if (spat_tick) want.push_back(MsgType::Spat);
    auto in = collect(e_planner, k, want, "planner");
    auto* env_msg = find(in, MsgType::EnvState);
    auto* spat_msg = find(in, MsgType::Spat);
    if (opt.record) {
      tr.messages.push_back(*env_msg);
      if (spat_msg) tr.messages.push_back(*spat_msg);
    }
    guarded(k, "planner", [&] {
      if (spat_msg) planner.consume_spat(std::get<SpatList>(spat_msg->payload), t);
      e_planner.send({seq.control++, t, planner.plan(std::get<EnvState>(env_msg->payload), t)});
    });
    auto ctl_in = collect(e_plant, k, {MsgType::Control}, "plant");
    ControlCommand ctl;
    if (auto* c = find(ctl_in, MsgType::Control)) {
      ctl = std::get<ControlCommand>(c->payload);
      last_control = ctl;
      if (opt.record) tr.messages.push_back(*c);
    } else {
      ++st.missed_controls;  // hold the previous command
      if (last_control) ctl = *last_control;
    }
    guarded(k, "plant", [&] {
      const Message vm{seq.veh++, t1, plant.step(ctl, t)};
      e_plant.send_to(vm, e_planner.local());
      e_plant.send_to(vm, e_env.local());
    });
    auto v_planner = collect(e_planner, k, {MsgType::VehState}, "planner");
    auto v_env = collect(e_env, k, {MsgType::VehState}, "env");
    const auto& v = std::get<VehState>(v_env.front().payload);
    if (opt.record) tr.messages.push_back(v_env.front());
    guarded(k, "planner", [&] { planner.consume_vehicle(std::get<VehState>(v_planner.front().payload), t1); });
    guarded(k, "env", [&] { env.consume(v, t1); });
    ++tr.ticks;
    if (opt.stop && opt.stop()) break;
  }
  st.env = e_env.counters();
  st.planner = e_planner.counters();
  st.plant = e_plant.counters();
  if (stats) *stats = st;
  return tr;
}

}  // namespace ecosim::bus
