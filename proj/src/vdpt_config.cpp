#include <algorithm>
#include <cmath>
#include <string>

#include "ecosim/embedded_data.hpp"
#include "ecosim/error.hpp"
#include "ecosim/text.hpp"
#include "ecosim/vdpt.hpp"

namespace ecosim::vdpt {

namespace {

using text::KvDocument;
using text::KvSection;

const KvSection& require_section(const KvDocument& doc, std::string_view name) {
  const auto* s = doc.section(name);
  if (!s) throw Error(ErrorCode::MissingTable, "missing section [" + std::string(name) + "]");
  return *s;
}

const text::KvEntry& require(const KvSection& s, std::string_view key) {
  const auto* e = s.find(key);
  if (!e) {
    throw Error(ErrorCode::MissingTable, "[" + s.name + "] is missing '" + std::string(key) + "'", s.line);
  }
  return *e;
}

double number(const KvSection& s, std::string_view key) { return text::kv_number(require(s, key)); }
std::vector<double> vec(const KvSection& s, std::string_view key) { return text::kv_vector(require(s, key)); }

double number_or(const KvSection& s, std::string_view key, double fallback) {
  const auto* e = s.find(key);
  return e ? text::kv_number(*e) : fallback;
}

void check_axis(const std::vector<double>& axis, const std::string& what) {
  if (axis.size() < 2) throw Error(ErrorCode::InvalidConfig, what + " needs at least 2 points");
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) throw Error(ErrorCode::NonMonotoneAxis, what + " is not strictly increasing");
  }
}

void check_size(const std::vector<double>& v, std::size_t n, const std::string& what) {
  if (v.size() != n) {
    throw Error(ErrorCode::InvalidConfig,
                what + " has " + std::to_string(v.size()) + " values, expected " + std::to_string(n));
  }
}

template <std::size_t N>
std::array<double, N> to_array(const std::vector<double>& v, const std::string& what) {
  check_size(v, N, what);
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace

void validate(const VehicleConfig& c) {
  const double scalars[] = {c.mass,          c.frontal_area, c.drag_coeff,    c.wheel_radius,
                            c.wheel_inertia, c.final_drive,  c.rolling_coeff, c.air_density,
                            c.brake_gain,    c.idle_speed,   c.engine_inertia};
  for (double v : scalars) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, "body/engine scalars must be positive");
  }
  for (int g = 0; g < kGears; ++g) {
    if (!(c.gear_ratios[g] > 0.0) || !(c.gear_inertia[g] > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "gear ratios and inertias must be positive");
    }
    if (g > 0 && !(c.gear_ratios[g] < c.gear_ratios[g - 1])) {
      throw Error(ErrorCode::InvalidConfig, "gear ratios must be strictly decreasing");
    }
  }
  if (c.motoring_c0 < 0.0 || c.motoring_c1 < 0.0) throw Error(ErrorCode::InvalidConfig, "motoring torque must be >= 0");
  if (!(c.cyl_deact_fuel_scale > 0.0) || c.cyl_deact_fuel_scale > 1.0) {
    throw Error(ErrorCode::InvalidConfig, "cyl_deact_fuel_scale must be in (0, 1]");
  }

  check_axis(c.engine.max_torque.axis, "engine torque speed axis");
  check_size(c.engine.max_torque.values, c.engine.max_torque.axis.size(), "max_torque");
  for (double t : c.engine.max_torque.values) {
    if (!(t > 0.0)) throw Error(ErrorCode::InvalidConfig, "max torque must be positive");
  }
  const auto& fuel = c.engine.fuel_rate;
  check_axis(fuel.x_axis, "fuel speed axis");
  check_axis(fuel.y_axis, "fuel torque axis");
  check_size(fuel.values, fuel.x_axis.size() * fuel.y_axis.size(), "fuel rate table");
  for (std::size_t i = 0; i < fuel.x_axis.size(); ++i) {
    for (std::size_t j = 0; j < fuel.y_axis.size(); ++j) {
      const double v = fuel.values[i * fuel.y_axis.size() + j];
      if (!(v >= 0.0)) throw Error(ErrorCode::InvalidConfig, "fuel rate must be >= 0");
      if (j > 0 && v < fuel.values[i * fuel.y_axis.size() + j - 1]) {
        throw Error(ErrorCode::InvalidConfig, "fuel rate must be non-decreasing in torque");
      }
    }
  }

  const auto& conv = c.converter;
  check_axis(conv.speed_ratio, "converter speed ratio axis");
  check_size(conv.torque_ratio, conv.speed_ratio.size(), "torque_ratio");
  check_size(conv.k_factor, conv.speed_ratio.size(), "k_factor");
  for (double k : conv.k_factor) {
    if (!(k > 0.0)) throw Error(ErrorCode::InvalidConfig, "k_factor must be positive");
  }
  if (std::abs(conv.torque_ratio_at(1.0) - 1.0) > 1e-3) {
    throw Error(ErrorCode::InvalidConfig, "torque ratio at coupling (SR = 1) must be 1");
  }
  if (!(conv.unlock_turbine_speed < conv.lockup_turbine_speed)) {
    throw Error(ErrorCode::InvalidConfig, "unlock speed must be below lockup speed");
  }

  check_axis(c.shift.throttle_axis, "shift throttle axis");
  for (int g = 1; g < kGears; ++g) {
    const auto& up = c.shift.upshift[g - 1];
    const auto& down = c.shift.downshift[g - 1];
    check_size(up, c.shift.throttle_axis.size(), "upshift_" + std::to_string(g));
    check_size(down, c.shift.throttle_axis.size(), "downshift_" + std::to_string(g + 1));
    for (std::size_t i = 0; i < up.size(); ++i) {
      if (!(down[i] < up[i])) {
        throw Error(ErrorCode::InvalidConfig,
                    "downshift_" + std::to_string(g + 1) + " must lie strictly below upshift_" + std::to_string(g));
      }
    }
  }
}

VehicleConfig load_vehicle_config(std::string_view doc_text) {
  const auto doc = KvDocument::parse(doc_text);
  VehicleConfig c;

  const auto& engine = require_section(doc, "engine");
  c.idle_speed = number(engine, "idle_speed");
  c.engine_inertia = number(engine, "inertia");
  const auto motoring = vec(engine, "motoring_torque");
  if (motoring.size() != 2) throw Error(ErrorCode::InvalidConfig, "motoring_torque needs c0, c1");
  c.motoring_c0 = motoring[0];
  c.motoring_c1 = motoring[1];
  c.idle_governor_gain = number_or(engine, "idle_governor_gain", c.idle_governor_gain);
  c.cyl_deact_fuel_scale = number_or(engine, "cyl_deact_fuel_scale", c.cyl_deact_fuel_scale);

  const auto& torque = require_section(doc, "engine.torque");
  c.engine.max_torque = {vec(torque, "speed"), vec(torque, "max_torque")};

  const auto& fuel = require_section(doc, "engine.fuel");
  c.engine.fuel_rate.x_axis = vec(fuel, "speed");
  c.engine.fuel_rate.y_axis = vec(fuel, "torque");
  bool any_rate = false;
  for (const auto& e : fuel.entries) {
    if (e.key != "rate") continue;
    any_rate = true;
    const auto row = text::kv_vector(e);
    if (row.size() != c.engine.fuel_rate.y_axis.size()) {
      throw Error(ErrorCode::InvalidConfig, "fuel rate row length differs from torque axis", e.line);
    }
    c.engine.fuel_rate.values.insert(c.engine.fuel_rate.values.end(), row.begin(), row.end());
  }
  if (!any_rate) throw Error(ErrorCode::MissingTable, "[engine.fuel] has no 'rate' rows", fuel.line);

  const auto& conv = require_section(doc, "converter");
  c.converter.speed_ratio = vec(conv, "speed_ratio");
  c.converter.torque_ratio = vec(conv, "torque_ratio");
  c.converter.k_factor = vec(conv, "k_factor");
  c.converter.lockup_turbine_speed = number(conv, "lockup_turbine_speed");
  c.converter.unlock_turbine_speed = number(conv, "unlock_turbine_speed");
  c.converter.coast_min_turbine_speed = number(conv, "coast_min_turbine_speed");

  const auto& trans = require_section(doc, "transmission");
  c.gear_ratios = to_array<kGears>(vec(trans, "gear_ratios"), "gear_ratios");
  c.gear_inertia = to_array<kGears>(vec(trans, "gear_inertia"), "gear_inertia");
  c.shift.throttle_axis = vec(trans, "throttle");
  for (int g = 1; g < kGears; ++g) {
    c.shift.upshift[g - 1] = vec(trans, "upshift_" + std::to_string(g));
    c.shift.downshift[g - 1] = vec(trans, "downshift_" + std::to_string(g + 1));
  }

  const auto& body = require_section(doc, "body");
  c.mass = number(body, "mass");
  c.frontal_area = number(body, "frontal_area");
  c.drag_coeff = number(body, "drag_coeff");
  c.wheel_radius = number(body, "wheel_radius");
  c.wheel_inertia = number(body, "wheel_inertia");
  c.final_drive = number(body, "final_drive");
  c.rolling_coeff = number(body, "rolling_coeff");
  c.air_density = number(body, "air_density");
  c.brake_gain = number(body, "brake_gain");

  validate(c);
  return c;
}

std::string_view default_vehicle_config_text() { return embedded::kVehicleDefault; }

const VehicleConfig& default_vehicle_config() {
  static const VehicleConfig cfg = load_vehicle_config(embedded::kVehicleDefault);
  return cfg;
}

}  // namespace ecosim::vdpt
