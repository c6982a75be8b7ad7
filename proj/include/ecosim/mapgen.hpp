#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ecosim/cycle.hpp"

namespace ecosim::mapgen {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

double distance(Vec2 a, Vec2 b);

// Constant-curvature road piece: origin, initial heading, length, curvature.
struct Edge {
  Vec2 origin;
  double heading = 0.0;
  double length = 0.0;
  double curvature = 0.0;
  double speed_limit = 0.0;
  double grade = 0.0;

  Vec2 point_at(double s) const;
  double heading_at(double s) const { return heading + curvature * s; }
  Vec2 end_point() const { return point_at(length); }
  bool operator==(const Edge&) const = default;
};

struct EdgeController {
  std::size_t edge_index = 0;
  double offset_m = 0.0;
  cycle::ControlKind kind = cycle::ControlKind::None;
  bool operator==(const EdgeController&) const = default;
};

struct EdgeMap {
  std::vector<Edge> edges;
  std::vector<EdgeController> controllers;

  double total_length() const;
  // Arc length of the start of each edge (size edges+1, last = total).
  std::vector<double> edge_starts() const;
  bool operator==(const EdgeMap&) const = default;
};

struct Waypoint {
  Vec2 position;
  double altitude = 0.0;
  double lane_width = 0.0;
  double speed_limit = 0.0;
  bool operator==(const Waypoint&) const = default;
};

struct Checkpoint {
  std::size_t waypoint_index = 0;
  cycle::ControlKind kind = cycle::ControlKind::None;
  bool operator==(const Checkpoint&) const = default;
};

struct WaypointMap {
  std::vector<Waypoint> waypoints;
  std::vector<Checkpoint> checkpoints;
  double tile_length = 3.0;
  bool operator==(const WaypointMap&) const = default;
};

struct ConsistencyReport {
  double max_position_error = 0.0;
  double max_controller_offset_error = 0.0;
  bool pass = false;
};

inline constexpr double kDefaultTileLength = 3.0;
inline constexpr double kDefaultLaneWidth = 3.5;
inline constexpr double kPositionTolerance = 0.5;
inline constexpr double kControllerTolerance = 3.0;
inline constexpr double kLengthMismatchTolerance = 1.0;

EdgeMap realize_geometry(const cycle::DriveCycle& cycle);

// Number of equal tiles an edge of `length` is split into.
std::size_t tile_count(double length, double tile_length);

WaypointMap emit_waypoint_map(const EdgeMap& edge_map, double tile_length = kDefaultTileLength,
                              double lane_width = kDefaultLaneWidth);

// Throws LengthMismatch when the waypoint polyline cannot be aligned with the
// edge map (tiling mismatch, or reconstructed arc totals differ by > 1 m).
ConsistencyReport check_consistency(const EdgeMap& edge_map, const WaypointMap& wp_map);

// Altitude along the edge map at arc length s (piecewise linear in grade).
double altitude_at(const EdgeMap& edge_map, double s);

std::string emit_edge_file(const EdgeMap& edge_map);
EdgeMap parse_edge_file(std::string_view doc);
std::string emit_waypoint_file(const WaypointMap& wp_map);
WaypointMap parse_waypoint_file(std::string_view doc);

}  // namespace ecosim::mapgen
