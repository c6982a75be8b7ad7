#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "ecosim/error.hpp"
#include "ecosim/harness.hpp"
#include "ecosim/mapgen.hpp"
#include "ecosim/text.hpp"

namespace ecosim::harness {

namespace {

VehicleState ego_from(const bus::VehState& v) {
  VehicleState s;
  s.arc_position = v.arc;
  s.speed = v.speed;
  s.accel = v.accel;
  s.powertrain.engine_speed = v.engine_speed;
  s.powertrain.gear = v.gear;
  s.powertrain.fuel_rate = v.fuel_rate;
  s.powertrain.fuel_total = v.fuel_total;
  return s;
}

BusMode bus_mode(const RunOptions& opt) {
  if (opt.bus) return *opt.bus;
  const char* env = std::getenv("ECOSIM_BUS_MODE");
  if (!env || std::string_view(env).empty() || std::string_view(env) == "lockstep") return BusMode::Lockstep;
  if (std::string_view(env) == "udp") return BusMode::Udp;
  throw Error(ErrorCode::InvalidConfig, "ECOSIM_BUS_MODE must be lockstep or udp");
}

}  // namespace

std::string fingerprint(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

eco::StrategyConfig baseline_strategy(eco::StrategyConfig s) {
  s.approach = s.departure = s.cruise = false;
  return s;
}

bool converter_locked_from(const vdpt::VehicleConfig& cfg, const bus::VehState& v) {
  if (v.gear < 1 || v.gear > vdpt::kGears) return false;
  const double turbine = v.speed / cfg.wheel_radius * cfg.overall_ratio(v.gear);
  return turbine > 0.0 && std::abs(v.engine_speed - turbine) <= 1e-9 * turbine;
}

// --- adapters ---

bus::EnvState EnvAdapter::emit_state(double) {
  const auto snap = world_.snapshot();
  bus::EnvState e;
  e.arc = snap.ego_echo.arc_position;
  e.speed = snap.ego_echo.speed;
  e.accel = snap.ego_echo.accel;
  e.grade = snap.grade_here;
  e.obstacles = snap.visible_obstacles;
  return e;
}

bus::SpatList EnvAdapter::emit_spat(double) { return bus::SpatList{world_.snapshot().spat}; }

void EnvAdapter::consume(const bus::VehState& v, double) {
  world_.step(dt_);
  world_.set_ego(ego_from(v));
}

PlannerAdapter::PlannerAdapter(const world::RouteView& route, const vdpt::VehicleConfig& cfg,
                               const eco::StrategyConfig& s, const world::IdmParams& idm)
    : route_(route), cfg_(cfg), planner_(route, cfg, s, idm) {
  last_.engine_speed = cfg.idle_speed;
}

void PlannerAdapter::consume_spat(const bus::SpatList& s, double) { spat_ = s.lights; }

void PlannerAdapter::consume_vehicle(const bus::VehState& v, double) { last_ = v; }

ControlCommand PlannerAdapter::plan(const bus::EnvState& env, double t) {
  EnvSnapshot snap;
  snap.sim_time = t;
  snap.ego_echo = ego_from(last_);
  snap.ego_echo.arc_position = env.arc;
  snap.ego_echo.speed = env.speed;
  snap.ego_echo.accel = env.accel;
  snap.ego_echo.powertrain.converter_locked = converter_locked_from(cfg_, last_);
  snap.visible_obstacles = env.obstacles;
  snap.spat = spat_;
  snap.grade_here = env.grade;
  snap.speed_limit_here = route_.speed_limit_at(env.arc);
  if (const auto rc = route_.next_control(env.arc)) {
    snap.next_control = ControlAhead{rc->arc - env.arc, rc->arc, rc->kind, rc->id};
  }
  return planner_.step(snap);
}

bus::VehState PlantAdapter::step(const ControlCommand& c, double) {
  return bus::to_wire(plant_.step(c, route_.grade_at(plant_.state().arc_position)));
}

// --- runs ---

RunTrace run_scenario(const cycle::DriveCycle& cycle, const world::ScenarioConfig& scenario,
                      const eco::StrategyConfig& strategy, const vdpt::VehicleConfig& vehicle,
                      const RunOptions& opt) {
  cycle::validate(cycle);
  vdpt::validate(vehicle);
  const world::RouteView route(mapgen::realize_geometry(cycle));
  const double timeout = opt.timeout_s ? *opt.timeout_s : scenario.timeout_factor * free_flow_time(cycle);
  if (!(timeout > 0.0) || !std::isfinite(timeout)) throw Error(ErrorCode::InvalidConfig, "timeout must be positive");

  world::World world(route, scenario);
  world.warm_up();
  PlantAdapter plant(route, vehicle);
  world.set_ego(plant.plant().state());
  EnvAdapter env(world);
  PlannerAdapter planner(route, vehicle, strategy, scenario.idm);

  RunTrace trace;
  trace.header.scenario_id = cycle.id;
  trace.header.seed = scenario.seed;
  trace.header.strategy = opt.strategy_label;
  trace.header.config_hashes = opt.config_hashes;
  trace.header.config_hashes["cycle"] = fingerprint(cycle::emit_cycle(cycle));
  trace.route_length = route.length();

  bus::RunOptions ro;
  ro.record = false;
  std::uint64_t k = 0;
  ro.stop = [&] {
    const auto& s = plant.plant().state();
    TraceRow r;
    r.t = static_cast<double>(++k) * ro.schedule.base_period;
    r.arc = s.arc_position;
    r.speed = s.speed;
    r.accel = s.accel;
    r.alt = route.altitude_at(s.arc_position);
    r.fuel_rate = s.powertrain.fuel_rate;
    r.fuel_total = s.powertrain.fuel_total;
    r.gear = s.powertrain.gear;
    r.mode = planner.planner().mode();
    trace.rows.push_back(r);
    return s.arc_position >= route.length();
  };
  if (bus_mode(opt) == BusMode::Udp) {
    bus::udp_run(env, planner, plant, timeout, ro);
  } else {
    bus::lockstep_run(env, planner, plant, timeout, ro);
  }
  trace.completed = trace.final_arc() >= route.length();
  if (!trace.completed) {
    throw Error(ErrorCode::Timeout, cycle.id + ": route end not reached within " + text::format_sig(timeout, 6) + " s");
  }
  return trace;
}

}  // namespace ecosim::harness
