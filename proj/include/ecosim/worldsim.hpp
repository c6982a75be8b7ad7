#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "ecosim/mapgen.hpp"
#include "ecosim/types.hpp"

// Traffic environment: signal timing, V2I broadcast, ambient car-following
// traffic and the object-list sensor. Everything lives on the 1-D route arc.
namespace ecosim::world {

inline constexpr double kV2iRange = 300.0;
inline constexpr double kV2iPeriod = 0.1;
inline constexpr double kSensorRange = 150.0;

struct SpatCycle {
  double red_s = 15.0;
  double green_s = 13.0;
  double yellow_s = 2.0;

  double total() const { return red_s + green_s + yellow_s; }
  bool operator==(const SpatCycle&) const = default;
};

struct TrafficLight {
  std::uint32_t id = 0;
  double arc_position = 0.0;
  SpatCycle cycle;
  double phase_offset = 0.0;
};

// Phase arithmetic runs on integer microseconds so that periodicity holds
// field-exactly (up to the timestamp).
SpatMessage spat_at(const TrafficLight& light, double t);

struct IdmParams {
  double a_max = 1.5;   // m/s^2
  double b = 2.0;       // comfortable deceleration, m/s^2
  double s0 = 2.0;      // standstill gap, m
  double T = 1.5;       // time headway, s
  double b_max = 9.0;   // emergency clamp, m/s^2
  double stop_s0 = 1.0; // standstill gap to a stop line, m
};

// IDM acceleration. Throws NegativeGap when the leader overlaps the follower.
double car_following_accel(const Obstacle& follower, const Obstacle* leader, double speed_limit,
                           const IdmParams& p = {});

// IDM term for a standing virtual leader `dist` metres ahead (a stop line).
double stop_line_accel(double v, double dist, double v0, const IdmParams& p = {});

// Acceleration cap to be at `v_next` after `dist` metres; +inf when not binding.
double limit_lookahead_accel(double v, double v_next, double dist);

// Closed interval on |arc - ego|; sorted by distance, ties by id.
std::vector<Obstacle> sensor_scan(double ego_pos, const std::vector<Obstacle>& obstacles,
                                  double range = kSensorRange);

// Stateless 10 Hz refresh: messages carry the latest tick time.
std::vector<SpatMessage> v2i_visible(double ego_pos, const std::vector<TrafficLight>& lights, double t,
                                     double range = kV2iRange);

struct RouteControl {
  double arc = 0.0;
  cycle::ControlKind kind = cycle::ControlKind::None;
  std::uint32_t id = 0;  // light id for lights, ordinal among all controls otherwise
};

// Route queries over an edge map (speed limit, grade, controls by arc).
class RouteView {
 public:
  explicit RouteView(const mapgen::EdgeMap& edges);

  double length() const { return starts_.back(); }
  std::size_t edge_at(double s) const;
  double speed_limit_at(double s) const;
  double grade_at(double s) const;
  double altitude_at(double s) const;
  double heading_at(double s) const;
  const std::vector<RouteControl>& controls() const { return controls_; }
  // First control whose line is strictly ahead of s.
  std::optional<RouteControl> next_control(double s) const;
  // Lowest speed limit that must be honoured within `horizon`, as the binding
  // deceleration for a vehicle at (s, v).
  double limit_lookahead(double s, double v, double horizon) const;
  const mapgen::EdgeMap& edges() const { return map_; }

 private:
  mapgen::EdgeMap map_;
  std::vector<double> starts_;
  std::vector<double> altitudes_;
  std::vector<RouteControl> controls_;
};

// Control response shared by ambient drivers and the baseline: stop at red,
// dilemma-zone rule on yellow (commit once decided), 2 s stop-sign dwell.
struct ControlView {
  double distance = 0.0;
  cycle::ControlKind kind = cycle::ControlKind::None;
  std::uint32_t id = 0;
  std::optional<Phase> phase;  // lights only, when known
};

class SignalResponder {
 public:
  static constexpr double kStopDwell = 2.0;
  static constexpr double kStoppedSpeed = 0.1;
  static constexpr double kStopZone = 3.0;
  static constexpr double kSettleTime = 0.5;  // s, stop-zone speed decay

  // Returns the acceleration cap demanded by `next` (+inf when none).
  double accel_cap(const std::optional<ControlView>& next, double v, double v0, double dt,
                   const IdmParams& p = {});
  // True while the vehicle is holding for a control (used for mode labels).
  bool holding() const { return holding_; }

 private:
  std::optional<std::uint32_t> served_sign_;
  double dwell_ = 0.0;
  std::optional<std::uint32_t> commit_light_;
  bool commit_go_ = false;
  bool holding_ = false;
};

struct StaticSpec {
  double arc = 0.0;
  double length = 4.8;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  bool traffic = true;
  double mean_headway_s = 9.0;   // Poisson arrivals at the origin
  double warmup_s = 300.0;
  double spawn_quiet_s = 3.0;   // no arrivals this long before the ego enters
  double desired_speed_mean = 0.9;   // fraction of the limit
  double desired_speed_sigma = 0.12; // OU stationary deviation
  double desired_speed_tau = 20.0;   // s
  double sensor_range = kSensorRange;
  double v2i_range = kV2iRange;
  SpatCycle spat;
  double spat_offset = 0.0;
  std::map<std::uint32_t, std::pair<SpatCycle, double>> light_overrides;
  std::vector<StaticSpec> statics;
  IdmParams idm;
  double timeout_factor = 3.0;  // run timeout as a multiple of free-flow time

  bool traffic_enabled() const { return traffic && mean_headway_s > 0.0; }
};

ScenarioConfig parse_scenario_config(std::string_view doc);
std::string_view default_scenario_config_text();

// Deterministic generator: raw mt19937_64 bits mapped by hand so draws do not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double exponential(double mean);
  double normal();
  std::uint64_t bits() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  std::optional<double> spare_;
};

class World {
 public:
  World(const RouteView& route, const ScenarioConfig& cfg);

  // Runs ambient traffic from -warmup_s up to t = 0.
  void warm_up();
  void step(double dt);
  void set_ego(const VehicleState& ego) { ego_ = ego; }
  // Inserts an ambient vehicle (kept in front-most-first order).
  void add_vehicle(const Obstacle& o);

  double time() const { return t_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  const std::vector<TrafficLight>& lights() const { return lights_; }
  const RouteView& route() const { return route_; }
  const ScenarioConfig& config() const { return cfg_; }
  EnvSnapshot snapshot() const;

 private:
  struct Ambient {
    double desired_dev = 0.0;  // OU state
    SignalResponder responder;
  };

  void spawn();
  std::optional<ControlView> control_view(double front, double t) const;

  const RouteView& route_;
  ScenarioConfig cfg_;
  Rng rng_;
  double t_ = 0.0;
  double next_arrival_ = 0.0;
  std::uint32_t next_id_ = 1;
  std::vector<TrafficLight> lights_;
  std::vector<Obstacle> obstacles_;  // ordered front-most first
  std::map<std::uint32_t, Ambient> ambient_;
  VehicleState ego_;
};

// Lights for the route under a scenario config.
std::vector<TrafficLight> make_lights(const RouteView& route, const ScenarioConfig& cfg);

}  // namespace ecosim::world
