#pragma once

// Observed convergence orders from residuals on a sequence of grids.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blaschke/error.hpp"

namespace blaschke {

/// Residuals at or below this are treated as rounding noise.
inline constexpr double kRoundingFloor = 1e-11;

struct OrderFit {
  std::optional<double> order;  // empty when every value sits at the floor
  bool floor = false;

  bool passes(double min_order) const { return floor || (order && *order >= min_order); }
  std::string label() const {
    if (floor) return "floor";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *order);
    return buf;
  }
};

/// Least-squares slope of log(value) against log(h).
inline OrderFit fit_order(const std::vector<double>& h, const std::vector<double>& value,
                          double floor = kRoundingFloor) {
  if (h.size() != value.size() || h.size() < 2)
    throw DomainError("fit_order needs at least two (h, value) pairs");
  bool all_floor = true;
  for (double v : value) all_floor = all_floor && std::abs(v) <= floor;
  if (all_floor) return {std::nullopt, true};
  double mx = 0, my = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!(value[k] > 0.0))
      throw DomainError("fit_order: residual " + std::to_string(value[k]) + " is not positive");
    mx += std::log(h[k]);
    my += std::log(value[k]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double dx = std::log(h[k]) - mx;
    sxy += dx * (std::log(value[k]) - my);
    sxx += dx * dx;
  }
  return {sxy / sxx, false};
}

}  // namespace blaschke
