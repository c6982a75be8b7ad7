#include "ecosim/mapgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecosim/error.hpp"
#include "ecosim/text.hpp"

namespace ecosim::mapgen {

namespace {

constexpr int kFileDigits = 9;

// sin(x)/x, accurate near zero.
double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

std::string fmt(double v) { return text::format_sig(v, kFileDigits); }

double field(std::string_view tok, std::size_t line) {
  const auto v = text::parse_double(tok);
  if (!v) throw Error(ErrorCode::MalformedDocument, "bad number '" + std::string(tok) + "'", line);
  if (!std::isfinite(*v)) throw Error(ErrorCode::OutOfRangeField, "non-finite value", line);
  return *v;
}

std::size_t index_field(std::string_view tok, std::size_t line) {
  const auto v = text::parse_int(tok);
  if (!v || *v < 0) throw Error(ErrorCode::MalformedDocument, "bad index '" + std::string(tok) + "'", line);
  return static_cast<std::size_t>(*v);
}

cycle::ControlKind kind_field(std::string_view tok, std::size_t line) {
  try {
    const auto kind = cycle::control_from_string(tok);
    if (kind == cycle::ControlKind::None) throw Error(ErrorCode::OutOfRangeField, "none");
    return kind;
  } catch (const Error&) {
    throw Error(ErrorCode::MalformedDocument, "bad controller kind '" + std::string(tok) + "'", line);
  }
}

// Arc length recovered from a chord of a circle with curvature k.
double arc_from_chord(double chord, double k) {
  const double half = std::abs(k) * chord / 2.0;
  if (half < 1e-9) return chord;
  return 2.0 * std::asin(std::min(1.0, half)) / std::abs(k);
}

}  // namespace

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

Vec2 Edge::point_at(double s) const {
  // Chord of length s * sinc(k s / 2) along the mid-arc heading.
  const double half = curvature * s / 2.0;
  const double chord = s * sinc(half);
  const double dir = heading + half;
  return {origin.x + chord * std::cos(dir), origin.y + chord * std::sin(dir)};
}

double EdgeMap::total_length() const {
  double total = 0.0;
  for (const auto& e : edges) total += e.length;
  return total;
}

std::vector<double> EdgeMap::edge_starts() const {
  std::vector<double> starts;
  starts.reserve(edges.size() + 1);
  double s = 0.0;
  starts.push_back(s);
  for (const auto& e : edges) {
    s += e.length;
    starts.push_back(s);
  }
  return starts;
}

EdgeMap realize_geometry(const cycle::DriveCycle& cycle) {
  EdgeMap map;
  map.edges.reserve(cycle.segments.size());
  Vec2 origin{0.0, 0.0};
  double heading = 0.0;
  for (std::size_t i = 0; i < cycle.segments.size(); ++i) {
    const auto& seg = cycle.segments[i];
    Edge e{origin, heading, seg.length_m, seg.curvature_inv_m, seg.speed_limit_mps, seg.grade};
    origin = e.end_point();
    heading = e.heading_at(e.length);
    map.edges.push_back(e);
    if (seg.control != cycle::ControlKind::None) map.controllers.push_back({i, seg.length_m, seg.control});
  }
  return map;
}

std::size_t tile_count(double length, double tile_length) {
  const double n = std::ceil(length / tile_length - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

WaypointMap emit_waypoint_map(const EdgeMap& edge_map, double tile_length, double lane_width) {
  if (!(tile_length > 0.0)) throw Error(ErrorCode::OutOfRangeField, "tile_length must be positive");
  WaypointMap wp;
  wp.tile_length = tile_length;
  if (edge_map.edges.empty()) return wp;

  std::vector<std::size_t> edge_end_index;
  double altitude = 0.0;
  const auto& first = edge_map.edges.front();
  wp.waypoints.push_back({first.origin, 0.0, lane_width, first.speed_limit});
  for (const auto& e : edge_map.edges) {
    const std::size_t n = tile_count(e.length, tile_length);
    for (std::size_t k = 1; k <= n; ++k) {
      const double s = e.length * static_cast<double>(k) / static_cast<double>(n);
      wp.waypoints.push_back({e.point_at(s), altitude + e.grade * s, lane_width, e.speed_limit});
    }
    altitude += e.grade * e.length;
    edge_end_index.push_back(wp.waypoints.size() - 1);
  }
  for (const auto& c : edge_map.controllers) {
    // Controllers sit at edge ends, which coincide with a waypoint.
    const auto& e = edge_map.edges[c.edge_index];
    const std::size_t n = tile_count(e.length, tile_length);
    const std::size_t first_idx = edge_end_index[c.edge_index] - n;
    const double tile = e.length / static_cast<double>(n);
    const auto k = static_cast<std::size_t>(std::llround(c.offset_m / tile));
    wp.checkpoints.push_back({first_idx + std::min(k, n), c.kind});
  }
  return wp;
}

ConsistencyReport check_consistency(const EdgeMap& edge_map, const WaypointMap& wp_map) {
  const double edge_total = edge_map.total_length();
  std::size_t expected = 1;
  for (const auto& e : edge_map.edges) expected += tile_count(e.length, wp_map.tile_length);
  if (edge_map.edges.empty() || wp_map.waypoints.size() != expected) {
    throw Error(ErrorCode::LengthMismatch, "waypoint count " + std::to_string(wp_map.waypoints.size()) +
                                               " does not match tiling of the edge map (" +
                                               std::to_string(expected) + ")");
  }

  ConsistencyReport report;
  std::vector<double> wp_arc(wp_map.waypoints.size(), 0.0);
  double measured_total = 0.0;
  std::size_t idx = 0;
  double edge_start = 0.0;
  report.max_position_error = distance(wp_map.waypoints[0].position, edge_map.edges[0].origin);
  for (const auto& e : edge_map.edges) {
    const std::size_t n = tile_count(e.length, wp_map.tile_length);
    for (std::size_t k = 1; k <= n; ++k) {
      ++idx;
      const double s = e.length * static_cast<double>(k) / static_cast<double>(n);
      wp_arc[idx] = edge_start + s;
      const double chord = distance(wp_map.waypoints[idx].position, wp_map.waypoints[idx - 1].position);
      measured_total += arc_from_chord(chord, e.curvature);
      report.max_position_error =
          std::max(report.max_position_error, distance(wp_map.waypoints[idx].position, e.point_at(s)));
    }
    edge_start += e.length;
  }
  if (std::abs(measured_total - edge_total) > kLengthMismatchTolerance) {
    throw Error(ErrorCode::LengthMismatch, "waypoint arc length " + text::format_shortest(measured_total) +
                                               " vs edge length " + text::format_shortest(edge_total));
  }

  const auto starts = edge_map.edge_starts();
  if (edge_map.controllers.size() != wp_map.checkpoints.size()) {
    report.max_controller_offset_error = std::numeric_limits<double>::infinity();
  } else {
    for (std::size_t i = 0; i < edge_map.controllers.size(); ++i) {
      const auto& c = edge_map.controllers[i];
      const auto& chk = wp_map.checkpoints[i];
      if (c.kind != chk.kind || c.edge_index >= edge_map.edges.size() ||
          chk.waypoint_index >= wp_arc.size()) {
        report.max_controller_offset_error = std::numeric_limits<double>::infinity();
        break;
      }
      const double err = std::abs(starts[c.edge_index] + c.offset_m - wp_arc[chk.waypoint_index]);
      report.max_controller_offset_error = std::max(report.max_controller_offset_error, err);
    }
  }
  report.pass = report.max_position_error <= kPositionTolerance &&
                report.max_controller_offset_error <= kControllerTolerance;
  return report;
}

double altitude_at(const EdgeMap& edge_map, double s) {
  double altitude = 0.0;
  double start = 0.0;
  for (const auto& e : edge_map.edges) {
    if (s <= start + e.length) return altitude + e.grade * std::max(0.0, s - start);
    altitude += e.grade * e.length;
    start += e.length;
  }
  return altitude;
}

std::string emit_edge_file(const EdgeMap& m) {
  std::string out = "EDGEMAP v1\n";
  for (const auto& e : m.edges) {
    out += fmt(e.origin.x) + ' ' + fmt(e.origin.y) + ' ' + fmt(e.heading) + ' ' + fmt(e.length) + ' ' +
           fmt(e.curvature) + ' ' + fmt(e.speed_limit) + ' ' + fmt(e.grade) + '\n';
  }
  for (const auto& c : m.controllers) {
    out += "CTRL " + std::to_string(c.edge_index) + ' ' + fmt(c.offset_m) + ' ' +
           std::string(cycle::to_string(c.kind)) + '\n';
  }
  return out;
}

EdgeMap parse_edge_file(std::string_view doc) {
  EdgeMap m;
  bool header = false;
  for (const auto& [number, raw] : text::lines(doc)) {
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "EDGEMAP v1") throw Error(ErrorCode::MalformedDocument, "expected 'EDGEMAP v1'", number);
      header = true;
      continue;
    }
    const auto tok = text::split_ws(line);
    if (tok.front() == "CTRL") {
      if (tok.size() != 4) throw Error(ErrorCode::MalformedDocument, "CTRL needs 3 fields", number);
      EdgeController c{index_field(tok[1], number), field(tok[2], number), kind_field(tok[3], number)};
      if (c.edge_index >= m.edges.size()) {
        throw Error(ErrorCode::MalformedDocument, "CTRL references unknown edge", number);
      }
      m.controllers.push_back(c);
      continue;
    }
    if (!m.controllers.empty()) throw Error(ErrorCode::MalformedDocument, "edge after CTRL lines", number);
    if (tok.size() != 7) throw Error(ErrorCode::MalformedDocument, "edge line needs 7 fields", number);
    Edge e{{field(tok[0], number), field(tok[1], number)}, field(tok[2], number), field(tok[3], number),
           field(tok[4], number), field(tok[5], number), field(tok[6], number)};
    if (e.length <= 0.0) throw Error(ErrorCode::OutOfRangeField, "edge length must be positive", number);
    m.edges.push_back(e);
  }
  if (!header) throw Error(ErrorCode::MalformedDocument, "missing header", 1);
  if (m.edges.empty()) throw Error(ErrorCode::MalformedDocument, "edge map has no edges", 1);
  return m;
}

std::string emit_waypoint_file(const WaypointMap& m) {
  std::string out = "WPMAP v1\n";
  out += "TILE " + fmt(m.tile_length) + '\n';
  for (const auto& w : m.waypoints) {
    out += fmt(w.position.x) + ' ' + fmt(w.position.y) + ' ' + fmt(w.altitude) + ' ' + fmt(w.lane_width) +
           ' ' + fmt(w.speed_limit) + '\n';
  }
  for (const auto& c : m.checkpoints) {
    out += "CHK " + std::to_string(c.waypoint_index) + ' ' + std::string(cycle::to_string(c.kind)) + '\n';
  }
  return out;
}

WaypointMap parse_waypoint_file(std::string_view doc) {
  WaypointMap m;
  bool header = false;
  for (const auto& [number, raw] : text::lines(doc)) {
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "WPMAP v1") throw Error(ErrorCode::MalformedDocument, "expected 'WPMAP v1'", number);
      header = true;
      continue;
    }
    const auto tok = text::split_ws(line);
    if (tok.front() == "TILE") {
      if (tok.size() != 2 || !m.waypoints.empty()) {
        throw Error(ErrorCode::MalformedDocument, "TILE must precede waypoints", number);
      }
      m.tile_length = field(tok[1], number);
      if (m.tile_length <= 0.0) throw Error(ErrorCode::OutOfRangeField, "tile length must be positive", number);
      continue;
    }
    if (tok.front() == "CHK") {
      if (tok.size() != 3) throw Error(ErrorCode::MalformedDocument, "CHK needs 2 fields", number);
      Checkpoint c{index_field(tok[1], number), kind_field(tok[2], number)};
      if (c.waypoint_index >= m.waypoints.size()) {
        throw Error(ErrorCode::MalformedDocument, "CHK references unknown waypoint", number);
      }
      m.checkpoints.push_back(c);
      continue;
    }
    if (!m.checkpoints.empty()) throw Error(ErrorCode::MalformedDocument, "waypoint after CHK lines", number);
    if (tok.size() != 5) throw Error(ErrorCode::MalformedDocument, "waypoint line needs 5 fields", number);
    Waypoint w{{field(tok[0], number), field(tok[1], number)}, field(tok[2], number), field(tok[3], number),
               field(tok[4], number)};
    if (w.lane_width <= 0.0) throw Error(ErrorCode::OutOfRangeField, "lane width must be positive", number);
    m.waypoints.push_back(w);
  }
  if (!header) throw Error(ErrorCode::MalformedDocument, "missing header", 1);
  if (m.waypoints.empty()) throw Error(ErrorCode::MalformedDocument, "waypoint map has no waypoints", 1);
  return m;
}

}  // namespace ecosim::mapgen
