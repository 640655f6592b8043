#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "blaschke/convergence.hpp"
#include "blaschke/factory.hpp"
#include "blaschke/grid.hpp"
#include "blaschke/pick.hpp"

namespace testing_support {

using namespace blaschke;

inline IsothermalChart square(double lo, double hi, int n, int eps = 1) {
  return {{lo, hi}, {lo, hi}, n, n, eps};
}

inline ConformalMetric flat(int n, int eps = 1) {
  return ConformalMetric(ScalarField::constant(square(-0.5, 0.5, n, eps), 0.0));
}

// improper-sphere metric from a harmonic preset and the curvature -2 factor
inline ConformalMetric factory_metric(const std::string& preset, int n, double w = 0.2) {
  const auto c = square(-w, w, n);
  return blaschke_from_harmonic(harmonic_preset(preset, {}, c), constant_curvature_factor(-1, c)).g;
}

inline PickOptions with_lambda(double lambda) {
  PickOptions o;
  o.lambda = lambda;
  return o;
}

inline double interior_min_abs(const ScalarField& f) {
  const int m = effective_margin(f, kInteriorMargin);
  double best = INFINITY;
  for (int j = m; j < f.ny() - m; ++j)
    for (int i = m; i < f.nx() - m; ++i) best = std::min(best, std::abs(f(i, j)));
  return best;
}

// least-squares order of value(n) over the given grids on an interval of length span
template <class Fn>
OrderFit order_over(const std::vector<int>& grids, double span, Fn&& value) {
  std::vector<double> h, v;
  for (int n : grids) {
    h.push_back(span / (n - 1));
    v.push_back(value(n));
  }
  return fit_order(h, v);
}

}  // namespace testing_support
