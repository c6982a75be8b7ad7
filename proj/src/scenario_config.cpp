#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>

#include "ecosim/embedded_data.hpp"
#include "ecosim/error.hpp"
#include "ecosim/text.hpp"
#include "ecosim/worldsim.hpp"

namespace ecosim::world {

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

void positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, what + " must be positive");
}

void read_cycle(const KvSection& s, SpatCycle& cycle, double& offset) {
  only_keys(s, {"red_s", "green_s", "yellow_s", "offset_s"});
  read(s, "red_s", cycle.red_s);
  read(s, "green_s", cycle.green_s);
  read(s, "yellow_s", cycle.yellow_s);
  read(s, "offset_s", offset);
  positive(cycle.red_s, "[" + s.name + "] red_s");
  positive(cycle.green_s, "[" + s.name + "] green_s");
  positive(cycle.yellow_s, "[" + s.name + "] yellow_s");
}

}  // namespace

ScenarioConfig parse_scenario_config(std::string_view doc_text) {
  const auto doc = text::KvDocument::parse(doc_text);
  ScenarioConfig c;
  for (const auto& s : doc.sections()) {
    if (s.name == "traffic") {
      only_keys(s, {"enabled", "seed", "mean_headway_s", "warmup_s", "spawn_quiet_s", "desired_speed_mean",
                    "desired_speed_sigma", "desired_speed_tau"});
      if (const auto* e = s.find("enabled")) c.traffic = text::kv_bool(*e);
      if (const auto* e = s.find("seed")) {
        const auto v = text::parse_int(e->value);
        if (!v || *v < 0) throw Error(ErrorCode::InvalidConfig, "seed must be a non-negative integer", e->line);
        c.seed = static_cast<std::uint64_t>(*v);
      }
      read(s, "mean_headway_s", c.mean_headway_s);
      read(s, "warmup_s", c.warmup_s);
      read(s, "spawn_quiet_s", c.spawn_quiet_s);
      read(s, "desired_speed_mean", c.desired_speed_mean);
      read(s, "desired_speed_sigma", c.desired_speed_sigma);
      read(s, "desired_speed_tau", c.desired_speed_tau);
      if (c.mean_headway_s < 0 || c.warmup_s < 0 || c.spawn_quiet_s < 0 || c.desired_speed_sigma < 0) {
        throw Error(ErrorCode::InvalidConfig, "[traffic] values must be non-negative", s.line);
      }
      positive(c.desired_speed_mean, "desired_speed_mean");
      positive(c.desired_speed_tau, "desired_speed_tau");
    } else if (s.name == "sensors") {
      only_keys(s, {"sensor_range", "v2i_range"});
      read(s, "sensor_range", c.sensor_range);
      read(s, "v2i_range", c.v2i_range);
      positive(c.sensor_range, "sensor_range");
      positive(c.v2i_range, "v2i_range");
    } else if (s.name == "spat") {
      read_cycle(s, c.spat, c.spat_offset);
    } else if (s.name.starts_with("spat.light.")) {
      const auto id = text::parse_int(std::string_view(s.name).substr(11));
      if (!id || *id < 0) throw Error(ErrorCode::InvalidConfig, "bad light id in [" + s.name + "]", s.line);
      auto entry = std::make_pair(c.spat, c.spat_offset);
      read_cycle(s, entry.first, entry.second);
      c.light_overrides[static_cast<std::uint32_t>(*id)] = entry;
    } else if (s.name == "idm") {
      only_keys(s, {"a_max", "b", "s0", "T", "b_max", "stop_s0"});
      read(s, "a_max", c.idm.a_max);
      read(s, "b", c.idm.b);
      read(s, "s0", c.idm.s0);
      read(s, "T", c.idm.T);
      read(s, "b_max", c.idm.b_max);
      read(s, "stop_s0", c.idm.stop_s0);
      for (double v : {c.idm.a_max, c.idm.b, c.idm.s0, c.idm.T, c.idm.b_max, c.idm.stop_s0}) positive(v, "[idm] value");
    } else if (s.name == "static") {
      only_keys(s, {"arc", "length"});
      double length = 4.8;
      read(s, "length", length);
      positive(length, "static length");
      if (const auto* e = s.find("arc")) {
        for (double a : text::kv_vector(*e)) c.statics.push_back({a, length});
      }
    } else if (s.name == "run") {
      only_keys(s, {"timeout_factor"});
      read(s, "timeout_factor", c.timeout_factor);
      positive(c.timeout_factor, "timeout_factor");
    } else if (!s.name.empty() || !s.entries.empty()) {
      throw Error(ErrorCode::InvalidConfig, "unknown section [" + s.name + "]", s.line);
    }
  }
  return c;
}

std::string_view default_scenario_config_text() { return embedded::kScenarioDefault; }

}  // namespace ecosim::world
