#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ecosim/cycle.hpp"

// Value types exchanged between the plant, the world and the planner.
namespace ecosim {

struct PowertrainState {
  double engine_speed = 0.0;  // rad/s
  int gear = 1;               // 1..8
  bool converter_locked = false;
  double fuel_rate = 0.0;     // g/s
  double fuel_total = 0.0;    // g
  bool dfco_active = false;
  bool neutral = false;       // declutched during a low-speed coast request

  bool operator==(const PowertrainState&) const = default;
};

struct VehicleState {
  double arc_position = 0.0;  // m along route
  double speed = 0.0;         // m/s, never negative
  double accel = 0.0;         // m/s^2
  PowertrainState powertrain;

  bool operator==(const VehicleState&) const = default;
};

struct ControlCommand {
  double throttle = 0.0;  // [0, 1]
  double brake = 0.0;     // [0, 1]
  bool dfco_request = false;
  std::optional<int> gear_hold;

  bool operator==(const ControlCommand&) const = default;
};

enum class Phase : std::uint8_t { Red = 0, Green = 1, Yellow = 2 };
std::string_view to_string(Phase p);

struct SpatMessage {
  std::uint32_t light_id = 0;
  Phase current_phase = Phase::Red;
  double time_remaining = 0.0;
  double next_phase_duration = 0.0;
  double full_cycle = 0.0;
  double timestamp = 0.0;

  bool operator==(const SpatMessage&) const = default;
};

enum class ObstacleKind : std::uint8_t { Vehicle = 0, Static = 1 };

// Arc position is the front bumper along the route.
struct Obstacle {
  std::uint32_t id = 0;
  ObstacleKind kind = ObstacleKind::Vehicle;
  double arc_position = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double length = 4.8;
  double width = 1.9;
  double heading = 0.0;

  double rear() const { return arc_position - length; }
  bool operator==(const Obstacle&) const = default;
};

struct ControlAhead {
  double distance = 0.0;  // m from ego front to the stop line
  double arc = 0.0;
  cycle::ControlKind kind = cycle::ControlKind::None;
  std::uint32_t id = 0;   // light id for traffic lights, ordinal otherwise
};

struct EnvSnapshot {
  double sim_time = 0.0;
  VehicleState ego_echo;
  std::vector<Obstacle> visible_obstacles;
  std::vector<SpatMessage> spat;
  double grade_here = 0.0;
  double speed_limit_here = 0.0;
  std::optional<ControlAhead> next_control;
};

inline constexpr double kEgoLength = 5.0;

}  // namespace ecosim
