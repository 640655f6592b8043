#pragma once

// Christoffel symbols, Ricci tensor and the residual suite of an induced
// structure (g, nabla = hat nabla + K, lambda).

#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

#include "blaschke/grid.hpp"
#include "blaschke/pick.hpp"

namespace blaschke {

/// Torsion-free connection coefficients Gamma^k_ij; only i <= j is stored, so
/// Gamma^k_ij = Gamma^k_ji holds by construction.
class ChristoffelField {
 public:
  using Slots = std::array<ScalarField, 3>;  // (1,1), (1,2), (2,2)

  ChristoffelField(Slots upper1, Slots upper2)
      : upper1_(std::move(upper1)), upper2_(std::move(upper2)) {}

  const ScalarField& operator()(int k, int i, int j) const {
    return (k == 1 ? upper1_ : upper2_)[slot(i, j)];
  }

  const IsothermalChart& chart() const { return upper1_[0].chart(); }

 private:
  static int slot(int i, int j) {
    if (i == 1 && j == 1) return 0;
    if (i == 2 && j == 2) return 2;
    return 1;
  }
  Slots upper1_, upper2_;
};

/// Levi-Civita connection of g = e^phi (dx^2 + eps dy^2):
///   G^1_11 = phi_x/2,  G^2_11 = -eps phi_y/2,  G^1_12 = phi_y/2,
///   G^2_12 = phi_x/2,  G^1_22 = -eps phi_x/2,  G^2_22 = phi_y/2.
inline ChristoffelField levi_civita(const ConformalMetric& g) {
  const double eps = g.epsilon();
  const auto px = 0.5 * partial(g.phi(), Axis::x);
  const auto py = 0.5 * partial(g.phi(), Axis::y);
  return ChristoffelField({px, py, -eps * px}, {-eps * py, px, py});
}

/// nabla = hat nabla + K.
inline ChristoffelField add_difference(const ChristoffelField& hat, const DifferenceTensor& K) {
  auto sum = [&](int k, int i, int j) { return hat(k, i, j) + K.component(k, i, j); };
  return ChristoffelField({sum(1, 1, 1), sum(1, 1, 2), sum(1, 2, 2)},
                          {sum(2, 1, 1), sum(2, 1, 2), sum(2, 2, 2)});
}

struct RicciField {
  ScalarField r11, r12, r22;
  ScalarField lambda11, lambda12, lambda22;
  ScalarField d1, d2;  // divergences div(d_i)
};

/// Ricci tensor from the Christoffel symbols:
///   D_1 = G^1_11 + G^2_21,  D_2 = G^1_12 + G^2_22,
///   r_11 = (G^2_11)_y - (G^2_12)_x - Lambda_11,
///   r_12 = (G^1_12)_x + (G^2_12)_y - Lambda_12 - (D_1)_y,
///   r_22 = (G^1_22)_x + (G^2_22)_y - Lambda_22 - (D_2)_y,
/// with the quadratic terms Lambda_ij below.
inline RicciField ricci_from_christoffels(const ChristoffelField& G) {
  const auto& g111 = G(1, 1, 1);
  const auto& g112 = G(1, 1, 2);
  const auto& g122 = G(1, 2, 2);
  const auto& g211 = G(2, 1, 1);
  const auto& g212 = G(2, 1, 2);
  const auto& g222 = G(2, 2, 2);

  auto lambda11 = g211 * g112 + g212 * g212 - g111 * g212 - g211 * g222;
  auto lambda12 = g122 * g211 - g112 * g212;
  auto lambda22 = g112 * g112 + g212 * g122 - g122 * g111 - g222 * g112;
  auto d1 = g111 + g212;
  auto d2 = g112 + g222;

  auto r11 = partial(g211, Axis::y) - partial(g212, Axis::x) - lambda11;
  auto r12 = partial(g112, Axis::x) + partial(g212, Axis::y) - lambda12 - partial(d1, Axis::y);
  auto r22 = partial(g122, Axis::x) + partial(g222, Axis::y) - lambda22 - partial(d2, Axis::y);
  return {std::move(r11),      std::move(r12),      std::move(r22), std::move(lambda11),
          std::move(lambda12), std::move(lambda22), std::move(d1),  std::move(d2)};
}

/// max_k,i,j |d_k g_ij - G^l_ki g_lj - G^l_kj g_il| over the interior.
inline double metric_compatibility_residual(const ConformalMetric& g, const ChristoffelField& G) {
  const double eps = g.epsilon();
  const auto e = g.conformal_factor();
  const ScalarField zero = ScalarField::constant(g.chart(), 0.0);
  auto metric = [&](int i, int j) -> ScalarField {
    if (i != j) return zero;
    return i == 1 ? e : eps * e;
  };
  double worst = 0.0;
  for (int k = 1; k <= 2; ++k)
    for (int i = 1; i <= 2; ++i)
      for (int j = i; j <= 2; ++j) {
        auto r = partial(metric(i, j), k == 1 ? Axis::x : Axis::y);
        for (int l = 1; l <= 2; ++l)
          r = r - G(l, k, i) * metric(l, j) - G(l, k, j) * metric(i, l);
        worst = std::max(worst, interior_max_abs(r));
      }
  return worst;
}

/// Gauss equation Ric = lambda g in isothermal components.
struct GaussResidual {
  ScalarField r11;  // r_11 - lambda e^phi
  ScalarField r12;  // r_12
  ScalarField r22;  // r_22 - eps lambda e^phi

  /// (r11 + eps r22) / 2: invariant under rotating K in its free plane.
  ScalarField trace_part(int eps) const { return 0.5 * (r11 + double(eps) * r22); }
  /// Pointwise magnitude of the trace-free part ((r11 - eps r22)/2, r12).
  ScalarField trace_free_magnitude(int eps) const {
    return zip(0.5 * (r11 - double(eps) * r22), r12,
               [](double a, double b) { return std::hypot(a, b); });
  }
};

inline GaussResidual gauss_residual(const ConformalMetric& g, const RicciField& ric,
                                    double lambda) {
  const auto e = g.conformal_factor();
  return {ric.r11 - lambda * e, ric.r12, ric.r22 - double(g.epsilon()) * lambda * e};
}

/// rho - (kappa - J) with rho = (r_11 + eps r_22) / (2 e^phi).
inline ScalarField egregium_residual(const ConformalMetric& g, const DifferenceTensor& K,
                                     const RicciField& ric) {
  const double eps = g.epsilon();
  const auto rho = zip(ric.r11 + eps * ric.r22, g.phi(),
                       [](double t, double p) { return 0.5 * t / std::exp(p); });
  return rho - (gaussian_curvature(g) - pick_invariant(K, g));
}

/// max |g(K(d_i, d_j), d_k) - g(K(d_i, d_k), d_j)| over the grid and all index
/// triples.
inline double cubic_symmetry_residual(const DifferenceTensor& K, const ConformalMetric& g) {
  const double eps = g.epsilon();
  const auto e = g.conformal_factor();
  auto lowered = [&](int i, int j, int k) {  // g(K(d_i, d_j), d_k)
    return (k == 1 ? 1.0 : eps) * (K.component(k, i, j) * e);
  };
  double worst = 0.0;
  for (int i = 1; i <= 2; ++i)
    for (int j = 1; j <= 2; ++j)
      for (int k = 1; k <= 2; ++k)
        worst = std::max(worst, max_abs(lowered(i, j, k) - lowered(i, k, j)));
  return worst;
}

/// max |tr K_{d_1}|, |tr K_{d_2}| over the grid.
inline double apolarity_residual(const DifferenceTensor& K) {
  return std::max(max_abs(K.component(1, 1, 1) + K.component(2, 2, 1)),
                  max_abs(K.component(1, 2, 1) + K.component(2, 2, 2)));
}

/// Interior max norms of every residual of a constructed sphere.
struct ResidualReport {
  double gauss_11 = 0.0;
  double gauss_12 = 0.0;
  double gauss_22 = 0.0;
  double egregium = 0.0;
  double apolarity = 0.0;
  double cubic = 0.0;
  // Rotation-invariant views of the Gauss residual.
  double gauss_trace = 0.0;
  double gauss_trace_free = 0.0;
  int interior_margin = kInteriorMargin;

  double gauss_max() const { return std::max({gauss_11, gauss_12, gauss_22}); }
};

inline nlohmann::json to_json(const ResidualReport& r) {
  return {{"gauss_11", r.gauss_11},   {"gauss_12", r.gauss_12},
          {"gauss_22", r.gauss_22},   {"egregium", r.egregium},
          {"apolarity", r.apolarity}, {"cubic", r.cubic}};
}

struct SphereCheck {
  ChristoffelField gamma;
  RicciField ricci;
  GaussResidual gauss;
  ScalarField egregium;
  ResidualReport report;
};

/// Builds nabla = hat nabla + K and evaluates the whole residual suite.
inline SphereCheck sphere_residual(const ConformalMetric& g, const DifferenceTensor& K,
                                   double lambda) {
  auto gamma = add_difference(levi_civita(g), K);
  auto ric = ricci_from_christoffels(gamma);
  auto gauss = gauss_residual(g, ric, lambda);
  auto egr = egregium_residual(g, K, ric);
  ResidualReport r;
  r.gauss_11 = interior_max_abs(gauss.r11);
  r.gauss_12 = interior_max_abs(gauss.r12);
  r.gauss_22 = interior_max_abs(gauss.r22);
  r.egregium = interior_max_abs(egr);
  r.apolarity = apolarity_residual(K);
  r.cubic = cubic_symmetry_residual(K, g);
  r.gauss_trace = interior_max_abs(gauss.trace_part(g.epsilon()));
  r.gauss_trace_free = interior_max_abs(gauss.trace_free_magnitude(g.epsilon()));
  r.interior_margin = std::max({effective_margin(gauss.r11), effective_margin(gauss.r12),
                                effective_margin(gauss.r22), effective_margin(egr)});
  return {std::move(gamma), std::move(ric), std::move(gauss), std::move(egr), r};
}

}  // namespace blaschke
