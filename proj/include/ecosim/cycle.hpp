#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ecosim::cycle {

enum class ControlKind { None, TrafficLight, StopSign, Turn };

std::string_view to_string(ControlKind kind);     // none | light | stop | turn
ControlKind control_from_string(std::string_view s);  // throws OutOfRangeField

// One route record. Grade is rise/run (tan of the slope angle), curvature is
// signed with left turns positive.
struct CycleSegment {
  double start_m = 0.0;
  double length_m = 0.0;
  double speed_limit_mps = 0.0;
  double grade = 0.0;
  double curvature_inv_m = 0.0;
  ControlKind control = ControlKind::None;

  double end_m() const { return start_m + length_m; }
  bool operator==(const CycleSegment&) const = default;
};

struct DriveCycle {
  std::string id;
  std::vector<CycleSegment> segments;

  double total_length() const;
  bool operator==(const DriveCycle&) const = default;
};

struct CycleStats {
  double distance_m = 0.0;
  int n_traffic_lights = 0;
  int n_intersections = 0;
};

inline constexpr double kMaxAbsGrade = 0.2;       // exclusive
inline constexpr double kMaxAbsCurvature = 0.1;   // inclusive
inline constexpr double kContiguityTolerance = 1e-6;

// Parses the CSV dialect. A leading `# id: <name>` comment sets the cycle id;
// otherwise `default_id` is used.
DriveCycle parse_cycle(std::string_view text, std::string_view default_id = "cycle");

// Emits the CSV dialect; parse_cycle(emit_cycle(c)) == c for every valid cycle.
std::string emit_cycle(const DriveCycle& cycle);

// Throws the same errors parse_cycle would for an invalid in-memory cycle.
void validate(const DriveCycle& cycle);

CycleStats cycle_stats(const DriveCycle& cycle);

}  // namespace ecosim::cycle
