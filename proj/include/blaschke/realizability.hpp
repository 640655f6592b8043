#pragma once

// Numerical test of the realizability condition
//
//     Delta ln|kappa - lambda| = 6 kappa,   kappa - lambda != 0 everywhere,
//
// for a conformal metric, and its flat-Laplacian reformulation
// Delta_0 (ln|kappa - lambda| + 3 phi) = 0.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "blaschke/error.hpp"
#include "blaschke/grid.hpp"

namespace blaschke {

inline constexpr double kDegeneracyTolerance = 1e-10;

struct ConditionReport {
  double lambda = 0.0;
  double max_residual = 0.0;
  double l2_residual = 0.0;
  double min_abs_kappa_minus_lambda = 0.0;
  int interior_margin = kInteriorMargin;

  bool degenerate(double tol = kDegeneracyTolerance) const {
    return !(min_abs_kappa_minus_lambda > tol);
  }
};

inline nlohmann::json to_json(const ConditionReport& r) {
  return {{"lambda", r.lambda},
          {"max_residual", r.max_residual},
          {"l2_residual", r.l2_residual},
          {"min_abs_kappa_minus_lambda", r.min_abs_kappa_minus_lambda},
          {"interior_margin", r.interior_margin}};
}

struct ConditionResult {
  ScalarField residual;
  ConditionReport report;
};

/// kappa - lambda, after checking it is nowhere (|.| < tol) zero. Throws
/// DegenerateError naming the first offending grid point in storage order.
inline ScalarField kappa_minus_lambda(const ScalarField& kappa, double lambda,
                                      double tol = kDegeneracyTolerance) {
  const auto& c = kappa.chart();
  for (int j = 0; j < c.ny(); ++j)
    for (int i = 0; i < c.nx(); ++i)
      if (!(std::abs(kappa(i, j) - lambda) >= tol))
        throw DegenerateError("kappa - lambda vanishes", i, j, c.x(i), c.y(j));
  return kappa - lambda;
}

inline double min_abs(const ScalarField& f) {
  double best = std::numeric_limits<double>::infinity();
  for (double v : f.values()) best = std::min(best, std::abs(v));
  return best;
}

inline ConditionReport make_report(const ScalarField& residual, double lambda,
                                   double min_gap, int min_margin) {
  ConditionReport r;
  r.lambda = lambda;
  r.interior_margin = effective_margin(residual, min_margin);
  r.max_residual = interior_max_abs(residual, min_margin);
  r.l2_residual = interior_l2(residual, min_margin);
  r.min_abs_kappa_minus_lambda = min_gap;
  return r;
}

/// Pointwise Delta ln|kappa - lambda| - 6 kappa with its interior report.
inline ConditionResult condition_residual(const ConformalMetric& g, double lambda,
                                          double tol = kDegeneracyTolerance,
                                          int min_margin = kInteriorMargin) {
  const auto kappa = gaussian_curvature(g);
  const auto gap = kappa_minus_lambda(kappa, lambda, tol);
  const auto log_gap = map(gap, [](double v) { return std::log(std::abs(v)); });
  auto residual = laplace_beltrami(log_gap, g) - 6.0 * kappa;
  auto report = make_report(residual, lambda, min_abs(gap), min_margin);
  return {std::move(residual), report};
}

/// Delta_0 (ln|kappa - lambda| + 3 phi); equals e^phi times the condition
/// residual.
inline ScalarField harmonic_defect(const ConformalMetric& g, double lambda,
                                   double tol = kDegeneracyTolerance) {
  const auto kappa = gaussian_curvature(g);
  const auto gap = kappa_minus_lambda(kappa, lambda, tol);
  const auto potential =
      zip(gap, g.phi(), [](double v, double p) { return std::log(std::abs(v)) + 3.0 * p; });
  return flat_laplacian(potential);
}

struct LambdaEstimate {
  double lambda = 0.0;
  ConditionReport report;
  /// The l2 residual is flat across every admissible sample: the data do not
  /// single out one lambda (e.g. the flat metric, where every lambda != 0 works).
  bool non_unique = false;
  int admissible_samples = 0;
};

/// Samples lambda on `search`, keeps the admissible sample with the smallest
/// l2 residual and refines it by golden-section search to width 1e-8.
inline LambdaEstimate estimate_lambda(const ConformalMetric& g, Interval search,
                                      int n_samples,
                                      double tol = kDegeneracyTolerance) {
  if (n_samples < 2) throw DomainError("estimate_lambda needs at least 2 samples");
  const auto kappa = gaussian_curvature(g);
  auto objective = [&](double lam) -> std::optional<double> {
    for (double k : kappa.values())
      if (!(std::abs(k - lam) >= tol)) return std::nullopt;
    return condition_residual(g, lam, tol).report.l2_residual;
  };

  std::vector<double> lams(n_samples);
  std::vector<std::optional<double>> vals(n_samples);
  int best = -1;
  double lo_val = std::numeric_limits<double>::infinity(), hi_val = -lo_val;
  int admissible = 0;
  for (int k = 0; k < n_samples; ++k) {
    lams[k] = search.lo + (search.hi - search.lo) * k / (n_samples - 1);
    vals[k] = objective(lams[k]);
    if (!vals[k]) continue;
    ++admissible;
    lo_val = std::min(lo_val, *vals[k]);
    hi_val = std::max(hi_val, *vals[k]);
    if (best < 0 || *vals[k] < *vals[best]) best = k;
  }
  if (best < 0) throw DegenerateError("no admissible lambda in search interval", 0, 0,
                                      search.lo, search.hi);

  // Bracket between the admissible neighbours of the best sample.
  double a = lams[best], b = lams[best];
  if (best > 0 && vals[best - 1]) a = lams[best - 1];
  if (best + 1 < n_samples && vals[best + 1]) b = lams[best + 1];

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto safe = [&](double lam) {
    auto v = objective(lam);
    return v ? *v : std::numeric_limits<double>::infinity();
  };
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = safe(c), fd = safe(d);
  while (b - a > 1e-8) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = safe(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = safe(d);
    }
  }
  double lam = 0.5 * (a + b);
  if (!objective(lam) || safe(lam) > *vals[best]) lam = lams[best];

  LambdaEstimate out;
  out.lambda = lam;
  out.report = condition_residual(g, lam, tol).report;
  out.admissible_samples = admissible;
  out.non_unique = admissible > 1 && (hi_val - lo_val) <= 1e-12 + 1e-9 * hi_val;
  return out;
}

}  // namespace blaschke
