#pragma once

// Blaschke metrics of improper affine spheres from a Delta_0-harmonic h and a
// factor c for which e^c g_0 has constant curvature 2s (s = curvature sign):
// phi = (h - c) / 2 gives kappa = -s e^{(3c - h)/2} and satisfies the
// realizability condition with lambda = 0.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "blaschke/error.hpp"
#include "blaschke/grid.hpp"

namespace blaschke {

namespace detail {

inline double max_radius_sq(const IsothermalChart& c) {
  const double x = std::max(std::abs(c.x_range().lo), std::abs(c.x_range().hi));
  const double y = std::max(std::abs(c.y_range().lo), std::abs(c.y_range().hi));
  return x * x + y * y;
}

inline double min_radius_sq(const IsothermalChart& c) {
  auto nearest = [](const Interval& r) {
    return r.contains(0.0) ? 0.0 : std::min(std::abs(r.lo), std::abs(r.hi));
  };
  const double x = nearest(c.x_range()), y = nearest(c.y_range());
  return x * x + y * y;
}

}  // namespace detail

/// c = ln 2 - 2 ln(1 + r^2) (sign +1) or ln 2 - 2 ln(1 - r^2) (sign -1). The
/// curvature of e^c g_0 is checked against 2 sign on the interior.
inline ScalarField constant_curvature_factor(int sign, const IsothermalChart& chart) {
  if (sign != 1 && sign != -1) throw DomainError("curvature sign must be +1 or -1");
  if (chart.epsilon() != 1)
    throw DomainError("constant-curvature factors are only provided for epsilon = +1");
  if (sign == -1 && !(detail::max_radius_sq(chart) < 1.0))
    throw DomainError("chart must lie inside the unit disk for curvature -2");
  auto c = ScalarField::sample(chart, [sign](double x, double y) {
    return std::log(2.0) - 2.0 * std::log(1.0 + sign * (x * x + y * y));
  });
  const auto kappa = gaussian_curvature(ConformalMetric(c));
  const double err = interior_max_abs(kappa - 2.0 * sign);
  // |d^4 c| stays below ~1e3 on charts with r^2 <= 0.5; generous on purpose.
  const double bound = 1e-9 + 1e3 * chart.h_max() * chart.h_max();
  if (!(err <= bound))
    throw Error("constant-curvature factor check failed: |kappa - 2s| = " + std::to_string(err));
  return c;
}

inline const std::vector<std::string>& harmonic_preset_names() {
  static const std::vector<std::string> names = {"constant", "linear",  "saddle",
                                                 "re_z2",    "exp_cos", "log_r"};
  return names;
}

/// Named harmonic function. Params: constant(v = 0), linear(a, b); the rest
/// take none. Delta_0 h is checked against a truncation bound.
inline ScalarField harmonic_preset(const std::string& name, const std::vector<double>& params,
                                   const IsothermalChart& chart) {
  auto param = [&](std::size_t k, double fallback) {
    return k < params.size() ? params[k] : fallback;
  };
  const double h2 = chart.h_max() * chart.h_max();
  const double xmax = std::max(std::abs(chart.x_range().lo), std::abs(chart.x_range().hi));
  ScalarField h = ScalarField::constant(chart, 0.0);
  double fourth = 0.0;  // bound on |f_xxxx| + |f_yyyy|
  if (name == "constant") {
    h = ScalarField::constant(chart, param(0, 0.0));
  } else if (name == "linear") {
    const double a = param(0, 1.0), b = param(1, 0.0);
    h = ScalarField::sample(chart, [=](double x, double y) { return a * x + b * y; });
  } else if (name == "saddle") {
    h = ScalarField::sample(chart, [](double x, double y) { return x * y; });
  } else if (name == "re_z2") {
    h = ScalarField::sample(chart, [](double x, double y) { return x * x - y * y; });
  } else if (name == "exp_cos") {
    h = ScalarField::sample(chart, [](double x, double y) { return std::exp(x) * std::cos(y); });
    fourth = 2.0 * std::exp(xmax);
  } else if (name == "log_r") {
    const double r2 = detail::min_radius_sq(chart);
    if (!(r2 > 0.0)) throw DomainError("log_r chart contains the origin");
    h = ScalarField::sample(chart, [](double x, double y) { return 0.5 * std::log(x * x + y * y); });
    fourth = 12.0 / (r2 * r2);
  } else {
    throw DomainError("unknown harmonic preset '" + name + "'");
  }
  // Truncation h^2/12 (f_xxxx + f_yyyy) plus rounding of the 3-point stencil.
  const double rounding = 1e-13 * (1.0 + max_abs(h)) / h2;
  const double bound = fourth * h2 / 12.0 + rounding + 1e-12;
  const double lap = interior_max_abs(flat_laplacian(h));
  if (!(lap <= bound))
    throw DomainError("preset '" + name + "' is not Delta_0-harmonic on this chart (|Delta_0 h| = " +
                      std::to_string(lap) + ")");
  return h;
}

struct FactoryMetric {
  ConformalMetric g;
  ScalarField kappa;
  double min_abs_kappa = 0.0;  // over the interior band
  bool degenerate = false;
  std::vector<std::string> warnings;
};

/// phi = (h - c) / 2. Flags degeneracy if kappa vanishes (|kappa| < tol) on the
/// interior.
inline FactoryMetric blaschke_from_harmonic(const ScalarField& h, const ScalarField& c,
                                            double tol = 1e-10) {
  require_same_grid(h, c);
  FactoryMetric out{ConformalMetric(0.5 * (h - c)), ScalarField::constant(h.chart(), 0.0), 0.0, false, {}};
  if (h.chart().epsilon() == -1)
    out.warnings.push_back(
        "epsilon = -1 harmonic factory: wave-type Delta_0, outside the definite setting");
  out.kappa = gaussian_curvature(out.g);
  const int m = effective_margin(out.kappa);
  require_interior(out.kappa, m);
  double best = std::numeric_limits<double>::infinity();
  for (int j = m; j < out.kappa.ny() - m; ++j)
    for (int i = m; i < out.kappa.nx() - m; ++i) best = std::min(best, std::abs(out.kappa(i, j)));
  out.min_abs_kappa = best;
  out.degenerate = !(best >= tol);
  return out;
}

/// -Delta_0 c / (2 e^c) - (2 s - 2 lambda e^{(h - 3c)/2}), s = curvature sign.
/// Vanishes (up to truncation) iff phi = (h - c)/2 is the Blaschke metric of a
/// lambda-sphere with sign(kappa - lambda) = -s.
inline ScalarField improper_condition_residual(const ScalarField& h, const ScalarField& c,
                                               double lambda, int curvature_sign) {
  require_same_grid(h, c);
  const double s = curvature_sign;
  const auto lhs = zip(flat_laplacian(c), c, [](double lap, double cv) {
    return -lap / (2.0 * std::exp(cv));
  });
  const auto rhs = zip(h, c, [s, lambda](double hv, double cv) {
    return 2.0 * s - 2.0 * lambda * std::exp(0.5 * (hv - 3.0 * cv));
  });
  return lhs - rhs;
}

}  // namespace blaschke
