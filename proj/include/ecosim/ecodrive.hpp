#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "ecosim/types.hpp"
#include "ecosim/vdpt.hpp"
#include "ecosim/worldsim.hpp"

// Planning and behaviours: baseline driver, Eco-Approach, Eco-Departure,
// Eco-Cruise, and the low-level follower that turns targets into pedals.
namespace ecosim::eco {

enum class PlanMode : std::uint8_t { Baseline = 0, EcoApproach = 1, EcoDeparture = 2, EcoCruise = 3 };
std::string_view to_string(PlanMode m);

struct PlanPoint {
  double arc_offset = 0.0;
  double target_speed = 0.0;
  bool operator==(const PlanPoint&) const = default;
};

struct SpeedPlan {
  double anchor = 0.0;
  std::vector<PlanPoint> points;
  PlanMode mode = PlanMode::Baseline;

  double end_arc() const { return points.empty() ? anchor : anchor + points.back().arc_offset; }
  // Linear interpolation in arc; throws PlanExpired past the last point.
  double target_at(double arc) const;
  bool operator==(const SpeedPlan&) const = default;
};

// Type invariants; limits checked against the route when given.
bool plan_is_legal(const SpeedPlan& plan, const world::RouteView* route = nullptr);

struct BandSpec {
  double v_ref = 0.0;
  double v_low = 0.0;
  double v_high = 0.0;
};

struct StrategyConfig {
  bool approach = true;
  bool departure = true;
  bool cruise = true;
  // Eco-Approach
  double approach_window = 10.0;      // m, half-width around the coast distance
  double approach_brake_speed = 2.0;  // m/s, friction brake only below this
  // Eco-Departure
  double departure_a_min = 0.5;
  double departure_a_max = 2.5;
  int departure_a_steps = 9;
  std::vector<double> departure_p{0.5, 1.0, 2.0};
  double departure_tail_time = 40.0;  // s; tail floor a >= v_target / this
  // Eco-Cruise
  double band_half_width = 2.0;
  double horizon = 1000.0;
  double dp_ds = 10.0;
  double dp_dv = 0.25;
  double dp_a_min = -1.5;
  double dp_a_max = 1.0;
  std::optional<double> lambda;       // g/s (may be negative); calibrated when unset
  double a_lat_max = 3.0;
  double replan_distance = 100.0;
  // Follower
  double tau = 1.0;                   // s, speed error to acceleration
  double ki = 0.6;                    // 1/s, integral on acceleration error
};

StrategyConfig parse_strategy_config(std::string_view doc);
std::string_view default_strategy_config_text();

// --- low-level follower ---

class Follower {
 public:
  explicit Follower(const vdpt::VehicleConfig& cfg, double ki = 0.6) : cfg_(&cfg), ki_(ki) {}

  // allow_fuel_cut lets the command request DFCO when engine braking is
  // needed; force_coast always requests it for zero throttle.
  ControlCommand command(double a_des, const VehicleState& state, double grade, bool allow_fuel_cut = true,
                         bool force_coast = false);
  // Engine braking force available while fuel-cut coasting at `state`.
  double coast_force(const VehicleState& state) const;
  void reset() { integ_ = 0.0; }

 private:
  const vdpt::VehicleConfig* cfg_;
  double ki_;
  double integ_ = 0.0;
  double last_a_des_ = 0.0;
  bool have_last_ = false;
};

// --- baseline driver ---

// Uses only the current SPaT phase; IDM headway; 2 s stop-sign dwell.
class BaselineDriver {
 public:
  BaselineDriver(const world::RouteView& route, const vdpt::VehicleConfig& cfg,
                 const world::IdmParams& idm = {}, double tau = 1.0, double ki = 0.6);

  // Acceleration the baseline wants this tick (advances dwell/commit state).
  double target_accel(const EnvSnapshot& snap, const VehicleState& state);
  // Headway/signal-limited target speed matching target_accel.
  double target_speed(double a_des, const VehicleState& state) const;
  ControlCommand drive(const EnvSnapshot& snap, const VehicleState& state);
  bool holding() const { return responder_.holding(); }
  Follower& follower() { return follower_; }
  double tau() const { return tau_; }

 private:
  const world::RouteView& route_;
  world::IdmParams idm_;
  double tau_;
  world::SignalResponder responder_;
  Follower follower_;
};

// Nearest obstacle ahead of the ego front (by rear bumper), if any.
const Obstacle* leader_of(const EnvSnapshot& snap, double ego_arc);

// --- Eco-Approach ---

using GradeProfile = std::function<double(double)>;  // grade at distance from start

// Distance covered by a fuel-cut coast from v0 to v_end on the full plant.
// Throws NeverReaches when the vehicle does not decelerate.
double coast_distance(const vdpt::VehicleConfig& cfg, double v0, double v_end, const GradeProfile& grade);
double coast_distance(const vdpt::VehicleConfig& cfg, double v0, double v_end, double grade = 0.0);

// Speed-vs-distance trace of the same coast down to v_end (for plan points).
std::vector<PlanPoint> coast_profile(const vdpt::VehicleConfig& cfg, double v0, double grade, double spacing = 2.0,
                                     double v_end = 0.0);

// Memoized coast distances down to end_speed per (speed, grade) bucket.
class CoastTable {
 public:
  explicit CoastTable(const vdpt::VehicleConfig& cfg, double end_speed = 0.0) : cfg_(&cfg), end_speed_(end_speed) {}
  // Interpolated in speed; nullopt when the coast never gets down to end_speed.
  std::optional<double> to_end(double v, double grade);
  double end_speed() const { return end_speed_; }
  const vdpt::VehicleConfig& config() const { return *cfg_; }

 private:
  std::optional<double> node(int vi, int gi);
  const vdpt::VehicleConfig* cfg_;
  double end_speed_;
  std::map<std::pair<int, int>, std::optional<double>> cache_;
};

// Learns phase durations from SPaT messages and predicts future phases.
class SpatPredictor {
 public:
  void observe(const SpatMessage& m);
  Phase phase_after(const SpatMessage& m, double dt) const;

 private:
  std::map<std::uint32_t, std::map<Phase, double>> durations_;
};

// Emits a coasting plan when the stop lies within the coast window, nullopt
// otherwise. mean_grade (to the stop line) defaults to the grade here.
std::optional<SpeedPlan> eco_approach_plan(const EnvSnapshot& snap, const VehicleState& state, CoastTable& table,
                                           const SpatPredictor& predictor, const StrategyConfig& cfg,
                                           std::optional<double> mean_grade = std::nullopt);

// --- Eco-Departure ---

struct DepartureCandidate {
  double a_peak = 0.0;
  double p = 1.0;
  double fuel_per_m = 0.0;   // g/m over the common horizon
  double time_to_95 = 0.0;   // s
};

struct DepartureChoice {
  DepartureCandidate best;
  std::vector<DepartureCandidate> grid;
  double horizon = 0.0;  // m
};

double departure_accel(double v, double v_target, double a_peak, double p, double a_tail);

class DepartureTable {
 public:
  DepartureTable(const vdpt::VehicleConfig& cfg, const StrategyConfig& s) : cfg_(&cfg), s_(&s) {}
  // Grid search on the plant, memoized per (0.5 m/s, 0.01 grade) bucket.
  const DepartureChoice& choose(double v_target, double grade);
  const StrategyConfig& strategy() const { return *s_; }

 private:
  const vdpt::VehicleConfig* cfg_;
  const StrategyConfig* s_;
  std::map<std::pair<int, int>, DepartureChoice> cache_;
};

SpeedPlan eco_departure_profile(double v_target, double grade, DepartureTable& table, double anchor = 0.0);

// --- Eco-Cruise ---

struct RouteWindow {
  double ds = 10.0;
  std::vector<double> grade;      // per stage
  std::vector<double> limit;      // per stage
  std::vector<double> curvature;  // per stage
};

RouteWindow route_window(const world::RouteView& route, double from, double horizon, double ds);

// Quasi-static fuel for moving ds metres from va to vb on a grade (g).
double quasi_static_fuel(const vdpt::VehicleConfig& cfg, double va, double vb, double ds, double grade);
// λ placing the flat-road steady optimum at v_ref on the speed grid.
double calibrate_lambda(const vdpt::VehicleConfig& cfg, const BandSpec& band, double dv, double ds);

struct CruiseProblem {
  std::vector<std::vector<double>> speeds;  // per stage node speeds (stage 0..N), ascending
  // cost(i, a, b): stage i from speeds[i][a] to speeds[i+1][b]; +inf when infeasible
  std::function<double(std::size_t, std::size_t, std::size_t)> cost;
  std::function<double(std::size_t)> terminal;  // on speeds[N]
  std::size_t start = 0;                        // index into speeds[0]
};

struct CruiseSolution {
  std::vector<std::size_t> path;  // node index per stage
  double cost = 0.0;
};

// Backward DP; ties go to the higher speed index.
CruiseSolution solve_cruise(const CruiseProblem& prob);
CruiseProblem build_cruise_problem(const vdpt::VehicleConfig& cfg, const RouteWindow& w, const BandSpec& band,
                                   double v_now, const StrategyConfig& s, double lambda);

SpeedPlan eco_cruise_plan(const vdpt::VehicleConfig& cfg, const RouteWindow& w, const BandSpec& band,
                          const VehicleState& state, const StrategyConfig& s, double* cost_out = nullptr);

// --- plan following ---

// Plan target a short preview ahead of the vehicle (PlanExpired past the end).
double plan_target(const SpeedPlan& plan, const VehicleState& state);

// Target-speed tracking with the safety override min-combined on speed.
ControlCommand follow_plan(const SpeedPlan& plan, const VehicleState& state, const EnvSnapshot& snap,
                           Follower& follower, double baseline_target_speed, double tau = 1.0);

// --- the full planner (baseline + enabled strategies) ---

class Planner {
 public:
  Planner(const world::RouteView& route, const vdpt::VehicleConfig& cfg, const StrategyConfig& s,
          const world::IdmParams& idm = {});

  ControlCommand step(const EnvSnapshot& snap);
  PlanMode mode() const { return mode_; }
  std::size_t illegal_plans() const { return illegal_plans_; }
  const std::optional<SpeedPlan>& plan() const { return plan_; }
  // Speed targets of the last step: commanded, and the baseline's own.
  double target_speed() const { return target_speed_; }
  double baseline_target_speed() const { return baseline_target_speed_; }

 private:
  bool stop_predicted(const EnvSnapshot& snap, const VehicleState& st) const;
  void adopt(SpeedPlan p);

  const world::RouteView& route_;
  const vdpt::VehicleConfig& cfg_;
  StrategyConfig s_;
  BaselineDriver baseline_;
  Follower follower_;
  CoastTable coast_;
  DepartureTable departure_;
  SpatPredictor predictor_;
  std::optional<SpeedPlan> plan_;
  PlanMode mode_ = PlanMode::Baseline;
  std::size_t illegal_plans_ = 0;
  bool was_stopped_ = true;
  double cruise_retry_arc_ = -1e300;
  double approach_line_ = -1.0;     // control line of the current approach plan
  double approach_retired_ = -1.0;  // no second approach for this line
  double target_speed_ = 0.0;
  double baseline_target_speed_ = 0.0;
};

}  // namespace ecosim::eco
