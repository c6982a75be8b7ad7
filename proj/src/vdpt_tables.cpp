#include <algorithm>
#include <cmath>

#include "ecosim/error.hpp"
#include "ecosim/vdpt.hpp"

namespace ecosim::vdpt {

namespace {

struct Bracket {
  std::size_t lo = 0;
  double frac = 0.0;
};

Bracket bracket(const std::vector<double>& axis, double x, Diagnostics* diag) {
  if (axis.size() < 2) return {0, 0.0};
  if (x <= axis.front()) {
    if (x < axis.front() && diag) ++diag->clamp_events;
    return {0, 0.0};
  }
  if (x >= axis.back()) {
    if (x > axis.back() && diag) ++diag->clamp_events;
    return {axis.size() - 2, 1.0};
  }
  const auto it = std::upper_bound(axis.begin(), axis.end(), x);
  const auto hi = static_cast<std::size_t>(it - axis.begin());
  const std::size_t lo = hi - 1;
  return {lo, (x - axis[lo]) / (axis[hi] - axis[lo])};
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

}  // namespace

double interp1(const std::vector<double>& axis, const std::vector<double>& values, double x,
               Diagnostics* diag) {
  if (values.size() == 1) return values.front();
  const auto b = bracket(axis, x, diag);
  return lerp(values[b.lo], values[b.lo + 1], b.frac);
}

double Table1D::at(double x, Diagnostics* diag) const { return interp1(axis, values, x, diag); }

double Table2D::at(double x, double y, Diagnostics* diag) const {
  const std::size_t ny = y_axis.size();
  const auto bx = bracket(x_axis, x, diag);
  const auto by = bracket(y_axis, y, diag);
  const auto v = [&](std::size_t i, std::size_t j) { return values[i * ny + j]; };
  const double lo = lerp(v(bx.lo, by.lo), v(bx.lo, by.lo + 1), by.frac);
  const double hi = lerp(v(bx.lo + 1, by.lo), v(bx.lo + 1, by.lo + 1), by.frac);
  return lerp(lo, hi, bx.frac);
}

double ConverterTables::torque_ratio_at(double sr) const { return interp1(speed_ratio, torque_ratio, sr); }

double ConverterTables::k_factor_at(double sr) const { return interp1(speed_ratio, k_factor, sr); }

double ShiftTables::upshift_speed(int gear, double throttle) const {
  return interp1(throttle_axis, upshift[gear - 1], throttle);
}

double ShiftTables::downshift_speed(int gear, double throttle) const {
  return interp1(throttle_axis, downshift[gear - 2], throttle);
}

}  // namespace ecosim::vdpt
