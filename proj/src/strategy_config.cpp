#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>

#include "ecosim/ecodrive.hpp"
#include "ecosim/embedded_data.hpp"
#include "ecosim/error.hpp"
#include "ecosim/text.hpp"

namespace ecosim::eco {

namespace {

using text::KvSection;

void only_keys(const KvSection& s, std::initializer_list<std::string_view> keys) {
  for (const auto& e : s.entries) {
    if (std::find(keys.begin(), keys.end(), e.key) == keys.end()) {
      throw Error(ErrorCode::InvalidConfig, "unknown key '" + e.key + "' in [" + s.name + "]", e.line);
    }
  }
}

void read(const KvSection& s, std::string_view key, double& out) {
  if (const auto* e = s.find(key)) out = text::kv_number(*e);
}

void read(const KvSection& s, std::string_view key, bool& out) {
  if (const auto* e = s.find(key)) out = text::kv_bool(*e);
}

void positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, what + " must be positive");
}

}  // namespace

StrategyConfig parse_strategy_config(std::string_view doc_text) {
  const auto doc = text::KvDocument::parse(doc_text);
  StrategyConfig c;
  for (const auto& s : doc.sections()) {
    if (s.name == "strategies") {
      only_keys(s, {"approach", "departure", "cruise"});
      read(s, "approach", c.approach);
      read(s, "departure", c.departure);
      read(s, "cruise", c.cruise);
    } else if (s.name == "approach") {
      only_keys(s, {"window", "brake_speed"});
      read(s, "window", c.approach_window);
      read(s, "brake_speed", c.approach_brake_speed);
      positive(c.approach_window, "[approach] window");
      positive(c.approach_brake_speed, "[approach] brake_speed");
    } else if (s.name == "departure") {
      only_keys(s, {"a_min", "a_max", "a_steps", "p", "tail_time"});
      read(s, "a_min", c.departure_a_min);
      read(s, "a_max", c.departure_a_max);
      if (const auto* e = s.find("a_steps")) {
        const auto v = text::parse_int(e->value);
        if (!v || *v < 1) throw Error(ErrorCode::InvalidConfig, "a_steps must be a positive integer", e->line);
        c.departure_a_steps = static_cast<int>(*v);
      }
      if (const auto* e = s.find("p")) {
        c.departure_p = text::kv_vector(*e);
        if (c.departure_p.empty()) throw Error(ErrorCode::InvalidConfig, "p must list at least one exponent", e->line);
        for (double p : c.departure_p) positive(p, "[departure] p");
      }
      read(s, "tail_time", c.departure_tail_time);
      positive(c.departure_a_min, "[departure] a_min");
      positive(c.departure_tail_time, "[departure] tail_time");
      if (c.departure_a_max < c.departure_a_min) {
        throw Error(ErrorCode::InvalidConfig, "[departure] a_max below a_min", s.line);
      }
    } else if (s.name == "cruise") {
      only_keys(s, {"band_half_width", "horizon", "ds", "dv", "a_min", "a_max", "lambda", "a_lat_max",
                    "replan_distance"});
      read(s, "band_half_width", c.band_half_width);
      read(s, "horizon", c.horizon);
      read(s, "ds", c.dp_ds);
      read(s, "dv", c.dp_dv);
      read(s, "a_min", c.dp_a_min);
      read(s, "a_max", c.dp_a_max);
      if (const auto* e = s.find("lambda")) {
        if (e->value == "auto") c.lambda.reset();
        else c.lambda = text::kv_number(*e);
        if (c.lambda && !std::isfinite(*c.lambda)) throw Error(ErrorCode::InvalidConfig, "lambda must be finite", e->line);
      }
      read(s, "a_lat_max", c.a_lat_max);
      read(s, "replan_distance", c.replan_distance);
      positive(c.band_half_width, "[cruise] band_half_width");
      positive(c.horizon, "[cruise] horizon");
      positive(c.dp_ds, "[cruise] ds");
      positive(c.dp_dv, "[cruise] dv");
      positive(c.dp_a_max, "[cruise] a_max");
      positive(-c.dp_a_min, "[cruise] -a_min");
      positive(c.a_lat_max, "[cruise] a_lat_max");
      positive(c.replan_distance, "[cruise] replan_distance");
    } else if (s.name == "follower") {
      only_keys(s, {"tau", "ki"});
      read(s, "tau", c.tau);
      read(s, "ki", c.ki);
      positive(c.tau, "[follower] tau");
      if (c.ki < 0.0) throw Error(ErrorCode::InvalidConfig, "[follower] ki must be >= 0", s.line);
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown section [" + s.name + "]", s.line);
    }
  }
  return c;
}

std::string_view default_strategy_config_text() { return embedded::kStrategyDefault; }

}  // namespace ecosim::eco
