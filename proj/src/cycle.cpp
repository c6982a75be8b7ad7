#include "ecosim/cycle.hpp"

#include <cmath>

#include "ecosim/error.hpp"
#include "ecosim/text.hpp"

namespace ecosim::cycle {

namespace {

constexpr std::string_view kHeader =
    "start_m,length_m,speed_limit_mps,grade,curvature_inv_m,control";
constexpr std::string_view kIdPrefix = "# id:";

void check_segment(const CycleSegment& s, std::size_t line) {
  const auto finite = std::isfinite(s.start_m) && std::isfinite(s.length_m) &&
                      std::isfinite(s.speed_limit_mps) && std::isfinite(s.grade) &&
                      std::isfinite(s.curvature_inv_m);
  if (!finite) throw Error(ErrorCode::OutOfRangeField, "non-finite field", line);
  if (s.length_m <= 0.0) throw Error(ErrorCode::OutOfRangeField, "length must be positive", line);
  if (s.speed_limit_mps <= 0.0) {
    throw Error(ErrorCode::OutOfRangeField, "speed limit must be positive", line);
  }
  if (std::abs(s.grade) >= kMaxAbsGrade) throw Error(ErrorCode::OutOfRangeField, "|grade| >= 0.2", line);
  if (std::abs(s.curvature_inv_m) > kMaxAbsCurvature) {
    throw Error(ErrorCode::OutOfRangeField, "|curvature| > 0.1", line);
  }
}

void check_contiguous(const CycleSegment& prev, const CycleSegment& next, std::size_t line) {
  if (std::abs(next.start_m - prev.end_m()) > kContiguityTolerance) {
    throw Error(ErrorCode::NonContiguousDistance,
                "segment starts at " + text::format_shortest(next.start_m) + " but previous ends at " +
                    text::format_shortest(prev.end_m()),
                line);
  }
}

}  // namespace

std::string_view to_string(ControlKind kind) {
  switch (kind) {
    case ControlKind::None: return "none";
    case ControlKind::TrafficLight: return "light";
    case ControlKind::StopSign: return "stop";
    case ControlKind::Turn: return "turn";
  }
  return "none";
}

ControlKind control_from_string(std::string_view s) {
  s = text::trim(s);
  if (s == "none") return ControlKind::None;
  if (s == "light") return ControlKind::TrafficLight;
  if (s == "stop") return ControlKind::StopSign;
  if (s == "turn") return ControlKind::Turn;
  throw Error(ErrorCode::OutOfRangeField, "unknown control '" + std::string(s) + "'");
}

double DriveCycle::total_length() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.length_m;
  return total;
}

DriveCycle parse_cycle(std::string_view doc, std::string_view default_id) {
  DriveCycle cycle;
  cycle.id = std::string(default_id);
  bool saw_header = false;
  for (const auto& [number, raw] : text::lines(doc)) {
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.substr(0, kIdPrefix.size()) == kIdPrefix && cycle.segments.empty()) {
        cycle.id = std::string(text::trim(line.substr(kIdPrefix.size())));
      }
      continue;
    }
    if (!saw_header) {
      if (line != kHeader) throw Error(ErrorCode::MalformedRow, "missing or wrong header", number);
      saw_header = true;
      continue;
    }
    const auto fields = text::split(line, ',');
    if (fields.size() != 6) throw Error(ErrorCode::MalformedRow, "expected 6 columns", number);
    double values[5];
    for (int i = 0; i < 5; ++i) {
      const auto v = text::parse_double(fields[i]);
      if (!v) throw Error(ErrorCode::MalformedRow, "column " + std::to_string(i + 1) + " is not a number", number);
      values[i] = *v;
    }
    CycleSegment seg{values[0], values[1], values[2], values[3], values[4], ControlKind::None};
    try {
      seg.control = control_from_string(fields[5]);
    } catch (const Error& e) {
      throw Error(e.code(), "unknown control kind", number);
    }
    check_segment(seg, number);
    if (cycle.segments.empty()) {
      if (std::abs(seg.start_m) > kContiguityTolerance) {
        throw Error(ErrorCode::NonContiguousDistance, "first segment must start at 0", number);
      }
    } else {
      check_contiguous(cycle.segments.back(), seg, number);
    }
    cycle.segments.push_back(seg);
  }
  if (!saw_header) throw Error(ErrorCode::MalformedRow, "missing header", 1);
  if (cycle.segments.empty()) throw Error(ErrorCode::MalformedRow, "cycle has no segments", 1);
  return cycle;
}

std::string emit_cycle(const DriveCycle& cycle) {
  std::string out;
  out += kIdPrefix;
  out += ' ';
  out += cycle.id;
  out += '\n';
  out += kHeader;
  out += '\n';
  for (const auto& s : cycle.segments) {
    out += text::format_shortest(s.start_m) + ',' + text::format_shortest(s.length_m) + ',' +
           text::format_shortest(s.speed_limit_mps) + ',' + text::format_shortest(s.grade) + ',' +
           text::format_shortest(s.curvature_inv_m) + ',' + std::string(to_string(s.control)) + '\n';
  }
  return out;
}

void validate(const DriveCycle& cycle) {
  if (cycle.segments.empty()) throw Error(ErrorCode::MalformedRow, "cycle has no segments");
  for (std::size_t i = 0; i < cycle.segments.size(); ++i) {
    check_segment(cycle.segments[i], i + 1);
    if (i == 0 && std::abs(cycle.segments[0].start_m) > kContiguityTolerance) {
      throw Error(ErrorCode::NonContiguousDistance, "first segment must start at 0", 1);
    }
    if (i > 0) check_contiguous(cycle.segments[i - 1], cycle.segments[i], i + 1);
  }
}

CycleStats cycle_stats(const DriveCycle& cycle) {
  CycleStats stats;
  if (!cycle.segments.empty()) stats.distance_m = cycle.segments.back().end_m();
  for (const auto& s : cycle.segments) {
    if (s.control == ControlKind::TrafficLight) ++stats.n_traffic_lights;
    if (s.control != ControlKind::None) ++stats.n_intersections;
  }
  return stats;
}

}  // namespace ecosim::cycle
