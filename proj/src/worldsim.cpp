#include "ecosim/worldsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecosim/error.hpp"
#include "ecosim/vdpt.hpp"

namespace ecosim::world {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t to_us(double s) { return std::llround(s * 1e6); }

std::int64_t floor_mod(std::int64_t a, std::int64_t m) { return ((a % m) + m) % m; }

// Speed-limit lookahead uses a gentler deceleration than the IDM comfort value.
constexpr double kLimitDecel = 1.0;
constexpr double kLimitTau = 1.0;

}  // namespace

SpatMessage spat_at(const TrafficLight& light, double t) {
  const std::int64_t red = to_us(light.cycle.red_s);
  const std::int64_t green = to_us(light.cycle.green_s);
  const std::int64_t yellow = to_us(light.cycle.yellow_s);
  const std::int64_t total = red + green + yellow;
  const std::int64_t m = floor_mod(to_us(t) + to_us(light.phase_offset), total);

  SpatMessage msg;
  msg.light_id = light.id;
  msg.full_cycle = static_cast<double>(total) / 1e6;
  msg.timestamp = t;
  std::int64_t remaining = 0, next = 0;
  if (m < red) {
    msg.current_phase = Phase::Red;
    remaining = red - m;
    next = green;
  } else if (m < red + green) {
    msg.current_phase = Phase::Green;
    remaining = red + green - m;
    next = yellow;
  } else {
    msg.current_phase = Phase::Yellow;
    remaining = total - m;
    next = red;
  }
  msg.time_remaining = static_cast<double>(remaining) / 1e6;
  msg.next_phase_duration = static_cast<double>(next) / 1e6;
  return msg;
}

double car_following_accel(const Obstacle& follower, const Obstacle* leader, double speed_limit,
                           const IdmParams& p) {
  const double v = std::max(0.0, follower.speed);
  const double v0 = std::max(speed_limit, 1e-3);
  double a = p.a_max * (1.0 - std::pow(v / v0, 4));
  if (leader) {
    const double gap = leader->rear() - follower.arc_position;
    if (gap <= 0.0) {
      throw Error(ErrorCode::NegativeGap, "vehicle " + std::to_string(follower.id) + " overlaps " +
                                              std::to_string(leader->id) + " (gap " + std::to_string(gap) + " m)");
    }
    const double dv = v - leader->speed;
    const double s_star = p.s0 + std::max(0.0, v * p.T + v * dv / (2.0 * std::sqrt(p.a_max * p.b)));
    a -= p.a_max * (s_star / gap) * (s_star / gap);
  }
  return std::clamp(a, -p.b_max, p.a_max);
}

double stop_line_accel(double v, double dist, double v0, const IdmParams& p) {
  v = std::max(0.0, v);
  const double gap = std::max(dist, 1e-3);
  const double s_star = p.stop_s0 + std::max(0.0, v * p.T + v * v / (2.0 * std::sqrt(p.a_max * p.b)));
  const double a = p.a_max * (1.0 - std::pow(v / std::max(v0, 1e-3), 4) - (s_star / gap) * (s_star / gap));
  return std::clamp(a, -p.b_max, p.a_max);
}

double limit_lookahead_accel(double v, double v_next, double dist) {
  if (v <= v_next) return kInf;
  const double allowed = std::sqrt(v_next * v_next + 2.0 * kLimitDecel * std::max(0.0, dist));
  return (allowed - v) / kLimitTau;
}

std::vector<Obstacle> sensor_scan(double ego_pos, const std::vector<Obstacle>& obstacles, double range) {
  std::vector<Obstacle> out;
  for (const auto& o : obstacles) {
    if (std::abs(o.arc_position - ego_pos) <= range) out.push_back(o);
  }
  std::sort(out.begin(), out.end(), [ego_pos](const Obstacle& a, const Obstacle& b) {
    const double da = std::abs(a.arc_position - ego_pos);
    const double db = std::abs(b.arc_position - ego_pos);
    return da != db ? da < db : a.id < b.id;
  });
  return out;
}

std::vector<SpatMessage> v2i_visible(double ego_pos, const std::vector<TrafficLight>& lights, double t,
                                     double range) {
  std::vector<SpatMessage> out;
  const double tick = std::floor(t / kV2iPeriod + 1e-9) * kV2iPeriod;
  for (const auto& l : lights) {
    if (std::abs(l.arc_position - ego_pos) <= range) out.push_back(spat_at(l, tick));
  }
  return out;
}

// --- RouteView ---

RouteView::RouteView(const mapgen::EdgeMap& edges) : map_(edges), starts_(edges.edge_starts()) {
  altitudes_.reserve(map_.edges.size() + 1);
  double alt = 0.0;
  altitudes_.push_back(alt);
  for (const auto& e : map_.edges) {
    alt += e.grade * e.length;
    altitudes_.push_back(alt);
  }
  std::uint32_t light_id = 0;
  std::uint32_t ordinal = 0;
  for (const auto& c : map_.controllers) {
    RouteControl rc;
    rc.arc = starts_[c.edge_index] + c.offset_m;
    rc.kind = c.kind;
    rc.id = c.kind == cycle::ControlKind::TrafficLight ? light_id++ : ordinal;
    ++ordinal;
    controls_.push_back(rc);
  }
  std::stable_sort(controls_.begin(), controls_.end(),
                   [](const RouteControl& a, const RouteControl& b) { return a.arc < b.arc; });
}

std::size_t RouteView::edge_at(double s) const {
  if (map_.edges.empty()) return 0;
  const auto it = std::upper_bound(starts_.begin(), starts_.end(), s);
  if (it == starts_.begin()) return 0;
  return std::min<std::size_t>(static_cast<std::size_t>(it - starts_.begin()) - 1, map_.edges.size() - 1);
}

double RouteView::speed_limit_at(double s) const { return map_.edges[edge_at(s)].speed_limit; }

double RouteView::grade_at(double s) const { return map_.edges[edge_at(s)].grade; }

double RouteView::altitude_at(double s) const {
  const auto i = edge_at(s);
  const double local = std::clamp(s - starts_[i], 0.0, map_.edges[i].length);
  return altitudes_[i] + map_.edges[i].grade * local;
}

double RouteView::heading_at(double s) const {
  const auto i = edge_at(s);
  return map_.edges[i].heading_at(std::clamp(s - starts_[i], 0.0, map_.edges[i].length));
}

std::optional<RouteControl> RouteView::next_control(double s) const {
  const auto it = std::upper_bound(controls_.begin(), controls_.end(), s,
                                   [](double x, const RouteControl& c) { return x < c.arc; });
  if (it == controls_.end()) return std::nullopt;
  return *it;
}

double RouteView::limit_lookahead(double s, double v, double horizon) const {
  double cap = kInf;
  for (std::size_t i = edge_at(s) + 1; i < map_.edges.size() && starts_[i] <= s + horizon; ++i) {
    cap = std::min(cap, limit_lookahead_accel(v, map_.edges[i].speed_limit, starts_[i] - s));
  }
  return cap;
}

// --- SignalResponder ---

double SignalResponder::accel_cap(const std::optional<ControlView>& next, double v, double v0, double dt,
                                  const IdmParams& p) {
  holding_ = false;
  if (!next || next->distance <= 0.0) return kInf;
  const auto& c = *next;
  bool stop = false;
  switch (c.kind) {
    case cycle::ControlKind::TrafficLight: {
      if (!c.phase) return kInf;
      const bool committed = commit_light_ && *commit_light_ == c.id;
      if (*c.phase == Phase::Green) {
        if (committed) commit_light_.reset();
        return kInf;
      }
      if (*c.phase == Phase::Yellow && !committed) {
        commit_light_ = c.id;
        commit_go_ = v * v / (2.0 * c.distance) > p.b;
      }
      stop = !(commit_light_ && *commit_light_ == c.id && commit_go_);
      break;
    }
    case cycle::ControlKind::StopSign: {
      if (served_sign_ && *served_sign_ == c.id) return kInf;
      if (c.distance <= kStopZone && v < kStoppedSpeed) {
        dwell_ += dt;
        if (dwell_ >= kStopDwell - 1e-9) {
          served_sign_ = c.id;
          dwell_ = 0.0;
          return kInf;
        }
      } else {
        dwell_ = 0.0;
      }
      stop = true;
      // Inside the zone, settle to rest instead of IDM's asymptotic creep.
      if (c.distance <= kStopZone) {
        holding_ = true;
        return std::min(stop_line_accel(v, c.distance, v0, p), std::max(-p.b_max, -v / kSettleTime));
      }
      break;
    }
    default:
      return kInf;
  }
  if (!stop) return kInf;
  holding_ = true;
  return stop_line_accel(v, c.distance, v0, p);
}

// --- Rng ---

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::exponential(double mean) { return -mean * std::log1p(-uniform()); }

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(th);
  return r * std::cos(th);
}

// --- World ---

std::vector<TrafficLight> make_lights(const RouteView& route, const ScenarioConfig& cfg) {
  std::vector<TrafficLight> lights;
  for (const auto& c : route.controls()) {
    if (c.kind != cycle::ControlKind::TrafficLight) continue;
    TrafficLight l;
    l.id = c.id;
    l.arc_position = c.arc;
    l.cycle = cfg.spat;
    l.phase_offset = cfg.spat_offset;
    if (auto it = cfg.light_overrides.find(c.id); it != cfg.light_overrides.end()) {
      l.cycle = it->second.first;
      l.phase_offset = it->second.second;
    }
    lights.push_back(l);
  }
  std::sort(lights.begin(), lights.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return lights;
}

World::World(const RouteView& route, const ScenarioConfig& cfg)
    : route_(route), cfg_(cfg), rng_(cfg.seed), lights_(make_lights(route, cfg)) {
  for (const auto& s : cfg_.statics) {
    Obstacle o;
    o.id = next_id_++;
    o.kind = ObstacleKind::Static;
    o.arc_position = s.arc;
    o.length = s.length;
    o.heading = route_.heading_at(s.arc);
    obstacles_.push_back(o);
  }
  std::sort(obstacles_.begin(), obstacles_.end(),
            [](const Obstacle& a, const Obstacle& b) { return a.arc_position > b.arc_position; });
  if (cfg_.traffic_enabled()) {
    t_ = -cfg_.warmup_s;
    next_arrival_ = t_ + rng_.exponential(cfg_.mean_headway_s);
  }
}

void World::warm_up() {
  while (t_ < -1e-9) step(vdpt::kStep);
  t_ = 0.0;
}

std::optional<ControlView> World::control_view(double front, double t) const {
  const auto rc = route_.next_control(front);
  if (!rc) return std::nullopt;
  ControlView v{rc->arc - front, rc->kind, rc->id, std::nullopt};
  if (rc->kind == cycle::ControlKind::TrafficLight && rc->id < lights_.size()) {
    v.phase = spat_at(lights_[rc->id], t).current_phase;
  }
  return v;
}

void World::spawn() {
  const double desired = cfg_.desired_speed_mean;
  const double v0 = route_.speed_limit_at(0.0) * desired;
  double v = v0;
  if (!obstacles_.empty()) {
    const Obstacle& last = obstacles_.back();
    const double gap = last.rear();
    const double needed = cfg_.idm.s0 + 1.0;
    if (gap < needed) return;  // entry blocked; the arrival waits
    // Enter no faster than the leader allows at comfortable deceleration.
    v = std::min(v, last.speed + std::sqrt(2.0 * cfg_.idm.b * std::max(0.0, gap - needed)));
    v = std::min(v, (gap - cfg_.idm.s0) / cfg_.idm.T);
    v = std::max(0.0, v);
  }
  Obstacle o;
  o.id = next_id_++;
  o.kind = ObstacleKind::Vehicle;
  o.arc_position = 0.0;
  o.speed = v;
  o.heading = route_.heading_at(0.0);
  obstacles_.push_back(o);
  ambient_[o.id] = Ambient{};
  next_arrival_ += rng_.exponential(cfg_.mean_headway_s);
}

void World::add_vehicle(const Obstacle& o) {
  Obstacle v = o;
  v.id = next_id_++;
  const auto at = std::find_if(obstacles_.begin(), obstacles_.end(),
                               [&](const Obstacle& x) { return x.arc_position < v.arc_position; });
  obstacles_.insert(at, v);
  if (v.kind == ObstacleKind::Vehicle) ambient_[v.id] = Ambient{};
}

void World::step(double dt) {
  if (cfg_.traffic_enabled() && t_ < -cfg_.spawn_quiet_s && next_arrival_ <= t_) spawn();

  const auto& p = cfg_.idm;
  const double ou_decay = dt / cfg_.desired_speed_tau;
  const double ou_kick = cfg_.desired_speed_sigma * std::sqrt(2.0 * ou_decay);
  std::vector<double> accel(obstacles_.size(), 0.0);
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    auto& o = obstacles_[i];
    if (o.kind == ObstacleKind::Static) continue;
    auto& amb = ambient_[o.id];
    amb.desired_dev += -amb.desired_dev * ou_decay + ou_kick * rng_.normal();
    const double factor = std::clamp(cfg_.desired_speed_mean + amb.desired_dev, 0.3, 1.1);
    const double v0 = route_.speed_limit_at(o.arc_position) * factor;
    const Obstacle* leader = i > 0 ? &obstacles_[i - 1] : nullptr;
    double a = car_following_accel(o, leader, v0, p);
    a = std::min(a, amb.responder.accel_cap(control_view(o.arc_position, t_), o.speed, v0, dt, p));
    a = std::min(a, route_.limit_lookahead(o.arc_position, o.speed, 150.0));
    accel[i] = std::clamp(a, -p.b_max, p.a_max);
  }
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    auto& o = obstacles_[i];
    if (o.kind == ObstacleKind::Static) continue;
    const double v = std::max(0.0, o.speed + accel[i] * dt);
    o.accel = (v - o.speed) / dt;
    o.speed = v;
    o.arc_position += v * dt;
    o.heading = route_.heading_at(o.arc_position);
  }
  const double end = route_.length();
  std::erase_if(obstacles_, [&](const Obstacle& o) {
    if (o.kind != ObstacleKind::Vehicle || o.arc_position <= end) return false;
    ambient_.erase(o.id);
    return true;
  });
  t_ += dt;
}

EnvSnapshot World::snapshot() const {
  EnvSnapshot s;
  s.sim_time = t_;
  s.ego_echo = ego_;
  const double x = ego_.arc_position;
  s.visible_obstacles = sensor_scan(x, obstacles_, cfg_.sensor_range);
  s.spat = v2i_visible(x, lights_, t_, cfg_.v2i_range);
  s.grade_here = route_.grade_at(x);
  s.speed_limit_here = route_.speed_limit_at(x);
  if (const auto rc = route_.next_control(x)) s.next_control = ControlAhead{rc->arc - x, rc->arc, rc->kind, rc->id};
  return s;
}

}  // namespace ecosim::world
