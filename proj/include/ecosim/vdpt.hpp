#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ecosim/types.hpp"

// Longitudinal vehicle dynamics and conventional powertrain: engine, torque
// converter, 8-speed automatic transmission, lumped driveline and body.
namespace ecosim::vdpt {

inline constexpr double kStep = 0.020;  // s, bus tick
inline constexpr int kSubsteps = 4;     // converter/engine substeps per tick
inline constexpr double kGravity = 9.81;
inline constexpr int kGears = 8;

// Clamp events are counted so silent extrapolation is visible.
struct Diagnostics {
  std::size_t clamp_events = 0;
};

// Piecewise-linear lookup clamped at the axis ends.
double interp1(const std::vector<double>& axis, const std::vector<double>& values, double x,
               Diagnostics* diag = nullptr);

struct Table1D {
  std::vector<double> axis;
  std::vector<double> values;

  double at(double x, Diagnostics* diag = nullptr) const;
};

// values are row-major with one row per x_axis point.
struct Table2D {
  std::vector<double> x_axis;
  std::vector<double> y_axis;
  std::vector<double> values;

  double at(double x, double y, Diagnostics* diag = nullptr) const;
};

struct EngineTables {
  Table1D max_torque;  // N*m over engine speed (rad/s)
  Table2D fuel_rate;   // g/s over (rad/s, N*m)
};

struct ConverterTables {
  std::vector<double> speed_ratio;
  std::vector<double> torque_ratio;
  std::vector<double> k_factor;  // rpm / sqrt(N*m)
  double lockup_turbine_speed = 125.0;
  double unlock_turbine_speed = 110.0;
  double coast_min_turbine_speed = 94.0;

  double torque_ratio_at(double sr) const;
  double k_factor_at(double sr) const;
};

struct ShiftTables {
  std::vector<double> throttle_axis;
  std::array<std::vector<double>, kGears - 1> upshift;    // [g-1]: speed for g -> g+1
  std::array<std::vector<double>, kGears - 1> downshift;  // [g-2]: speed for g -> g-1

  double upshift_speed(int gear, double throttle) const;
  double downshift_speed(int gear, double throttle) const;
};

struct VehicleConfig {
  double mass = 0.0;
  double frontal_area = 0.0;
  double drag_coeff = 0.0;
  double wheel_radius = 0.0;
  double wheel_inertia = 0.0;
  double final_drive = 0.0;
  double rolling_coeff = 0.0;
  double air_density = 0.0;
  double brake_gain = 0.0;
  std::array<double, kGears> gear_ratios{};
  std::array<double, kGears> gear_inertia{};
  EngineTables engine;
  ConverterTables converter;
  ShiftTables shift;
  double idle_speed = 0.0;
  double engine_inertia = 0.0;
  double motoring_c0 = 0.0;  // closed-throttle drag torque c0 + c1*w during fuel cut
  double motoring_c1 = 0.0;
  double idle_governor_gain = 10.0;
  double cyl_deact_fuel_scale = 1.0;

  double overall_ratio(int gear) const { return gear_ratios[gear - 1] * final_drive; }
};

VehicleConfig load_vehicle_config(std::string_view doc);
const VehicleConfig& default_vehicle_config();
std::string_view default_vehicle_config_text();
// Throws InvalidConfig / NonMonotoneAxis describing the first violated invariant.
void validate(const VehicleConfig& cfg);

struct EngineFlags {
  bool dfco = false;
  bool shutoff = false;
  bool cyl_deact = false;
};

struct EngineOutput {
  double torque = 0.0;     // N*m, negative while motored under fuel cut
  double fuel_rate = 0.0;  // g/s
};

// load_torque is the governor's feed-forward of the impeller load.
EngineOutput engine_step(const VehicleConfig& cfg, double throttle, double engine_speed, EngineFlags flags,
                         double load_torque = 0.0, Diagnostics* diag = nullptr);

double motoring_torque(const VehicleConfig& cfg, double engine_speed);

struct ConverterOutput {
  double impeller_torque = 0.0;
  double turbine_torque = 0.0;
};

ConverterOutput converter_step(const ConverterTables& conv, double engine_speed, double turbine_speed, bool locked,
                               double locked_input_torque = 0.0);

struct TransmissionOutput {
  double output_torque = 0.0;
  int new_gear = 1;
};

TransmissionOutput transmission_step(const VehicleConfig& cfg, int gear, double turbine_torque,
                                     double vehicle_speed, double throttle);

struct RoadLoad {
  double aero = 0.0;
  double rolling = 0.0;
  double grade = 0.0;

  double total() const { return aero + rolling + grade; }
};

RoadLoad road_load(const VehicleConfig& cfg, double speed, double grade);
double effective_mass(const VehicleConfig& cfg, int gear);

VehicleState body_step(const VehicleConfig& cfg, const VehicleState& state, double output_torque,
                       double brake_cmd, double grade, double dt = kStep);

// Adds fuel_rate * dt to fuel_total; returns the increment in grams.
double fuel_integrate(PowertrainState& state, double dt);

// Stateful 50 Hz plant combining all of the above.
class Powertrain {
 public:
  explicit Powertrain(const VehicleConfig& cfg, double initial_speed = 0.0, double initial_arc = 0.0);

  const VehicleState& step(const ControlCommand& cmd, double grade, EngineFlags extra_flags = {});

  const VehicleState& state() const { return state_; }
  const Diagnostics& diagnostics() const { return diag_; }
  const VehicleConfig& config() const { return cfg_; }

 private:
  VehicleConfig cfg_;
  VehicleState state_;
  Diagnostics diag_;
};

}  // namespace ecosim::vdpt
