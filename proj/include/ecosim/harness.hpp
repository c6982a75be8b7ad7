#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecosim/bus.hpp"
#include "ecosim/cycle.hpp"
#include "ecosim/ecodrive.hpp"
#include "ecosim/vdpt.hpp"
#include "ecosim/worldsim.hpp"

// Suite generation, end-to-end scenario runs over the bus, trace export and
// baseline-vs-eco comparison.
namespace ecosim::harness {

// --- suite generation ---

struct Band {
  double lo = 0.0;
  double hi = 0.0;
  double mean = 0.0;  // target suite mean
};

struct ClassSpec {
  std::string prefix;
  int count = 0;
  Band distance_km;
  Band lights;
  Band intersections;          // lights + stop signs
  std::vector<double> limits;  // m/s, drawn per stretch between controls
};

struct SuiteSpec {
  ClassSpec short_trips;
  ClassSpec long_trips;
  double mean_tolerance = 0.15;  // relative, on every suite mean
  double max_grade = 0.08;
  double grade_step = 0.01;      // random-walk step sigma
  double grade_reversion = 0.8;  // AR(1) pull toward level road
  double min_control_gap = 80.0; // m between control lines and from the ends
  double turn_share = 0.3;       // fraction of intersections followed by a turn
  int max_attempts = 2000;       // per class
};

// Target distance, light and intersection bands for 10 short and 10 long trips.
SuiteSpec default_suite_spec();

// Deterministic per seed. Throws SpecInfeasible when the bands contradict or
// no suite within tolerance is found.
std::vector<cycle::DriveCycle> generate_suite(std::uint64_t seed, const SuiteSpec& spec = default_suite_spec());

// 1.6 km, two lights and three stop signs; dips, then climbs to 17 m.
cycle::DriveCycle hill_cycle();

// Sum of segment length / limit.
double free_flow_time(const cycle::DriveCycle& c);

// --- scenario runs ---

struct TraceRow {
  double t = 0.0;
  double arc = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double alt = 0.0;
  double fuel_rate = 0.0;
  double fuel_total = 0.0;
  int gear = 1;
  eco::PlanMode mode = eco::PlanMode::Baseline;
  bool operator==(const TraceRow&) const = default;
};

struct TraceHeader {
  std::string scenario_id;
  std::uint64_t seed = 0;
  std::string strategy;                              // label, e.g. baseline / eco
  std::map<std::string, std::string> config_hashes;  // name -> 16 hex digits
  bool operator==(const TraceHeader&) const = default;
};

struct RunTrace {
  TraceHeader header;
  std::vector<TraceRow> rows;  // one per tick, t = (k + 1) * 0.020
  double route_length = 0.0;
  bool completed = false;

  double fuel() const { return rows.empty() ? 0.0 : rows.back().fuel_total; }
  double time() const { return rows.empty() ? 0.0 : rows.back().t; }
  double final_arc() const { return rows.empty() ? 0.0 : rows.back().arc; }
};

enum class BusMode { Lockstep, Udp };

struct RunOptions {
  std::optional<BusMode> bus;        // default: ECOSIM_BUS_MODE (lockstep | udp), else lockstep
  std::optional<double> timeout_s;   // overrides timeout_factor * free-flow time
  std::string strategy_label = "eco";
  std::map<std::string, std::string> config_hashes;  // merged into the header
};

// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fingerprint(std::string_view text);

// Strategy config with every eco strategy disabled.
eco::StrategyConfig baseline_strategy(eco::StrategyConfig s = {});

// Builds maps, runs env/planner/plant over the bus from standstill at arc 0
// until the route end. Throws Timeout or ComponentFault.
RunTrace run_scenario(const cycle::DriveCycle& cycle, const world::ScenarioConfig& scenario,
                      const eco::StrategyConfig& strategy,
                      const vdpt::VehicleConfig& vehicle = vdpt::default_vehicle_config(),
                      const RunOptions& opt = {});

// --- bus components over the simulation modules ---

class EnvAdapter : public bus::EnvStepper {
 public:
  EnvAdapter(world::World& world, double dt = vdpt::kStep) : world_(world), dt_(dt) {}
  bus::EnvState emit_state(double t) override;
  bus::SpatList emit_spat(double t) override;
  void consume(const bus::VehState& v, double t) override;

 private:
  world::World& world_;
  double dt_;
};

// Rebuilds the planner's snapshot from ENV_STATE, the latest SPAT, its own
// route map and the last VEH_STATE.
class PlannerAdapter : public bus::PlannerStepper {
 public:
  PlannerAdapter(const world::RouteView& route, const vdpt::VehicleConfig& cfg, const eco::StrategyConfig& s,
                 const world::IdmParams& idm = {});
  void consume_spat(const bus::SpatList& s, double t) override;
  void consume_vehicle(const bus::VehState& v, double t) override;
  ControlCommand plan(const bus::EnvState& env, double t) override;
  const eco::Planner& planner() const { return planner_; }

 private:
  const world::RouteView& route_;
  const vdpt::VehicleConfig& cfg_;
  eco::Planner planner_;
  std::vector<SpatMessage> spat_;
  bus::VehState last_;
};

class PlantAdapter : public bus::PlantStepper {
 public:
  PlantAdapter(const world::RouteView& route, const vdpt::VehicleConfig& cfg, double v0 = 0.0, double arc0 = 0.0)
      : route_(route), plant_(cfg, v0, arc0) {}
  bus::VehState step(const ControlCommand& c, double t) override;
  const vdpt::Powertrain& plant() const { return plant_; }

 private:
  const world::RouteView& route_;
  vdpt::Powertrain plant_;
};

// Lock state inferred from engine vs turbine speed.
bool converter_locked_from(const vdpt::VehicleConfig& cfg, const bus::VehState& v);

// --- trace files ---

inline constexpr std::string_view kCsvHeader = "t,arc_m,speed_mps,accel_mps2,alt_m,fuel_gps,fuel_g,gear,mode";

// Header line plus one row per tick; shortest round-trip number formatting.
std::string export_csv(const RunTrace& trace);
// Rows only; throws MalformedDocument / MalformedRow.
std::vector<TraceRow> parse_csv(std::string_view text);

// Header and run summary as JSON.
std::string export_sidecar(const RunTrace& trace);
// Restores header, route_length and completed; rows come from the CSV.
RunTrace parse_sidecar(std::string_view json);

// --- comparison ---

struct SavingsRow {
  std::string scenario_id;
  std::uint64_t seed = 0;
  double baseline_fuel = 0.0;
  double eco_fuel = 0.0;
  double saving_pct = 0.0;
  double baseline_time = 0.0;
  double eco_time = 0.0;
  double time_delta_pct = 0.0;
  int rank = 0;  // 1 = largest saving
};

struct SavingsReport {
  std::vector<SavingsRow> rows;  // ranked by saving_pct descending, ties by id
  SavingsRow mean;               // aggregate means (rank 0)
  double p50 = 0.0;              // saving_pct percentiles (linear interpolation)
  double p75 = 0.0;
  double p95 = 0.0;
  std::size_t excluded = 0;      // pairs with an incomplete run
};

// Pairs by (scenario id, seed); throws UnpairedTrace on any mismatch.
SavingsReport compare(const std::vector<RunTrace>& baseline, const std::vector<RunTrace>& eco);

double percentile(std::vector<double> values, double pct);
std::string format_report(const SavingsReport& r);
std::string report_json(const SavingsReport& r);

// --- brake calibration ---

struct SpeedSample {
  double t = 0.0;
  double speed = 0.0;
};

// Two-column CSV `t_s,speed_mps`, uniformly increasing time.
std::vector<SpeedSample> parse_speed_trace(std::string_view text);

// RMS speed error of the follower tracking `ref` on a flat road.
double brake_tracking_rms(const vdpt::VehicleConfig& cfg, const std::vector<SpeedSample>& ref);

struct BrakeCalibration {
  double gain = 0.0;
  double rms = 0.0;
  std::vector<std::pair<double, double>> sweep;  // (gain, rms)
};

// Smallest swept gain whose RMS is within `slack` of the best.
BrakeCalibration calibrate_brake_gain(vdpt::VehicleConfig cfg, const std::vector<SpeedSample>& ref,
                                      const std::vector<double>& gains, double slack = 0.02);

}  // namespace ecosim::harness
