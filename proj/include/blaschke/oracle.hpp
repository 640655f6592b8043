#pragma once

// Blaschke data computed directly from explicit graph immersions z = Psi(x, y),
// independent of the construction pipeline.
//
// For a graph with transversal e3 the second fundamental form is h = Hess Psi.
// The Blaschke metric is G = h |det h|^{-1/4}; the affine normal is
//
//     xi = rho e3 + f_* Z,   rho = |det h|^{1/4},   Z = -h^{-1} grad rho,
//
// and the shape operator is S = -dZ (column i holds d_i Z).
//
// kappa needs four derivatives of Psi and the necessity residual six, so with
// double samples on a small patch the rounding of Psi swamps the truncation
// error long before 128^2. Patches given by an expression are therefore
// sampled and differentiated in quad precision up to kappa and S; only the
// results are rounded to double.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <boost/multiprecision/float128.hpp>
#include <nlohmann/json.hpp>

#include "blaschke/error.hpp"
#include "blaschke/expression.hpp"
#include "blaschke/grid.hpp"
#include "blaschke/realizability.hpp"

namespace blaschke {

using Quad = boost::multiprecision::float128;

struct GraphPatch {
  ScalarField psi;
  std::string source;
  /// Set when the patch comes from expression text; enables quad precision.
  std::shared_ptr<const expr::Expression> expression;
};

inline GraphPatch graph_from_expression(const std::string& text, const IsothermalChart& chart) {
  auto e = std::make_shared<const expr::Expression>(expr::parse_expression(text));
  return {expr::evaluate(*e, chart), text, std::move(e)};
}

/// Symmetric 2x2 tensor field with its determinant.
template <class T>
struct BasicHessian {
  BasicField<T> h11, h12, h22;
  BasicField<T> det;
};
using HessianField = BasicHessian<double>;

namespace detail {

template <class T>
void require_nondegenerate(const BasicField<T>& det, double tol, const char* what) {
  using std::abs;
  const auto& c = det.chart();
  for (int j = 0; j < c.ny(); ++j)
    for (int i = 0; i < c.nx(); ++i)
      if (!(abs(det(i, j)) >= T(tol))) throw DegenerateError(what, i, j, c.x(i), c.y(j));
}

template <class T>
BasicHessian<T> hessian_of(const BasicField<T>& psi) {
  auto a = second_partial(psi, Axis::x);
  auto b = mixed_partial(psi);
  auto c = second_partial(psi, Axis::y);
  auto det = a * c - b * b;
  require_nondegenerate(det, 1e-10, "degenerate Hessian (det Hess Psi = 0)");
  return {std::move(a), std::move(b), std::move(c), std::move(det)};
}

inline BasicField<Quad> sample_quad(const GraphPatch& patch) {
  const auto& e = *patch.expression;
  return BasicField<Quad>::sample(patch.psi.chart(), [&e](const Quad& x, const Quad& y) {
    return e.evaluate_as<Quad>(x, y);
  });
}

template <class T>
HessianField to_double(const BasicHessian<T>& h) {
  return {blaschke::to_double(h.h11), blaschke::to_double(h.h12), blaschke::to_double(h.h22),
          blaschke::to_double(h.det)};
}

}  // namespace detail

/// h_ij = d_i d_j Psi, det = h11 h22 - h12^2.
inline HessianField hessian_metric(const GraphPatch& patch) {
  if (patch.expression) return detail::to_double(detail::hessian_of(detail::sample_quad(patch)));
  return detail::hessian_of(patch.psi);
}

/// Second fundamental form (transversal e3) of a parametrized graph
/// (X, Y, Z)(u, v), in the (u, v) coordinates:
///   h_ij = Z_ij - Psi_X X_ij - Psi_Y Y_ij,   (Psi_X, Psi_Y) = J^{-T} (Z_u, Z_v),
/// with J = d(X, Y)/d(u, v). `det` is det Hess_XY Psi = det h / det(J)^2.
struct ParametricGraph {
  ScalarField X, Y, Z;
};

inline HessianField parametric_hessian(const ParametricGraph& s) {
  const auto Xu = partial(s.X, Axis::x), Xv = partial(s.X, Axis::y);
  const auto Yu = partial(s.Y, Axis::x), Yv = partial(s.Y, Axis::y);
  const auto Zu = partial(s.Z, Axis::x), Zv = partial(s.Z, Axis::y);
  const auto jac = Xu * Yv - Xv * Yu;
  detail::require_nondegenerate(jac, 1e-10, "projection to the xy-plane is singular");
  // J^{-T} = [Yv, -Yu; -Xv, Xu] / det J
  const auto psiX = (Yv * Zu - Yu * Zv) / jac;
  const auto psiY = (Xu * Zv - Xv * Zu) / jac;
  auto form = [&](const ScalarField& Xij, const ScalarField& Yij, const ScalarField& Zij) {
    return Zij - psiX * Xij - psiY * Yij;
  };
  auto h11 = form(second_partial(s.X, Axis::x), second_partial(s.Y, Axis::x),
                  second_partial(s.Z, Axis::x));
  auto h12 = form(mixed_partial(s.X), mixed_partial(s.Y), mixed_partial(s.Z));
  auto h22 = form(second_partial(s.X, Axis::y), second_partial(s.Y, Axis::y),
                  second_partial(s.Z, Axis::y));
  auto det = (h11 * h22 - h12 * h12) / (jac * jac);
  detail::require_nondegenerate(det, 1e-10, "degenerate Hessian (det Hess Psi = 0)");
  return {std::move(h11), std::move(h12), std::move(h22), std::move(det)};
}

struct BlaschkeData {
  ScalarField G11, G12, G22;
  ScalarField kappa;
  ScalarField J_proxy;  // kappa - lambda
  double lambda = 0.0;
};

namespace detail {

template <class T>
BlaschkeData normalize(const BasicHessian<T>& h) {
  require_nondegenerate(h.det, 1e-300, "degenerate Hessian");
  const auto scale = map(h.det, [](const T& d) -> T {
    using std::abs, std::pow;
    return pow(abs(d), T(-0.25));
  });
  auto G11 = h.h11 * scale, G12 = h.h12 * scale, G22 = h.h22 * scale;
  auto kappa = to_double(brioschi_curvature(G11, G12, G22));
  auto J = kappa;
  return {to_double(G11), to_double(G12), to_double(G22), std::move(kappa), std::move(J), 0.0};
}

}  // namespace detail

/// G_ij = h_ij |det|^{-1/4}, kappa by the Brioschi formula. J_proxy is
/// kappa - lambda with lambda = 0 until necessity_test sets it.
inline BlaschkeData blaschke_normalize(const HessianField& h) { return detail::normalize(h); }

/// Hessian, normalization and kappa in one pass (quad precision for
/// expression patches).
inline BlaschkeData blaschke_data(const GraphPatch& patch) {
  if (patch.expression) return detail::normalize(detail::hessian_of(detail::sample_quad(patch)));
  return detail::normalize(detail::hessian_of(patch.psi));
}

/// (1/sqrt|D|) d_i (sqrt|D| G^{ij} d_j u) for a general metric G, D = det G,
/// with the stencils of `partial`.
inline ScalarField general_laplace_beltrami(const ScalarField& u, const ScalarField& G11,
                                            const ScalarField& G12, const ScalarField& G22) {
  const auto D = G11 * G22 - G12 * G12;
  detail::require_nondegenerate(D, 1e-12, "degenerate metric (det G = 0)");
  const auto root = map(D, [](double d) { return std::sqrt(std::abs(d)); });
  const auto ux = partial(u, Axis::x), uy = partial(u, Axis::y);
  // sqrt|D| G^{-1} = sqrt|D| / D * [G22, -G12; -G12, G11]
  const auto w = root / D;
  const auto flux1 = w * (G22 * ux - G12 * uy);
  const auto flux2 = w * (G11 * uy - G12 * ux);
  return (partial(flux1, Axis::x) + partial(flux2, Axis::y)) / root;
}

/// Delta_G ln|kappa - lambda| - 6 kappa over the interior.
inline ConditionResult necessity_residual(const BlaschkeData& data, double lambda,
                                          double tol = kDegeneracyTolerance) {
  const auto gap = kappa_minus_lambda(data.kappa, lambda, tol);
  const auto log_gap = map(gap, [](double v) { return std::log(std::abs(v)); });
  auto residual =
      general_laplace_beltrami(log_gap, data.G11, data.G12, data.G22) - 6.0 * data.kappa;
  auto report = make_report(residual, lambda, min_abs(gap), kInteriorMargin);
  return {std::move(residual), report};
}

inline ConditionReport necessity_test(BlaschkeData& data, double lambda,
                                      double tol = kDegeneracyTolerance) {
  auto r = necessity_residual(data, lambda, tol);
  data.lambda = lambda;
  data.J_proxy = data.kappa - lambda;
  return r.report;
}

struct ShapeEstimate {
  double lambda = 0.0;
  double fit_residual = 0.0;  // interior max |S - lambda id| (entrywise)
  bool warning = false;       // fit_residual > 0.05 |lambda| + 1e-3
  int interior_margin = kInteriorMargin;
};

inline nlohmann::json to_json(const ShapeEstimate& s) {
  return {{"lambda", s.lambda},
          {"fit_residual", s.fit_residual},
          {"warning", s.warning},
          {"interior_margin", s.interior_margin}};
}

namespace detail {

template <class T>
ShapeEstimate estimate_shape(const BasicField<T>& psi) {
  const auto h = hessian_of(psi);
  const auto rho = map(h.det, [](const T& d) -> T {
    using std::abs, std::pow;
    return pow(abs(d), T(0.25));
  });
  const auto rx = partial(rho, Axis::x), ry = partial(rho, Axis::y);
  // Z = -h^{-1} grad rho
  const auto Z1 = -1.0 * (h.h22 * rx - h.h12 * ry) / h.det;
  const auto Z2 = -1.0 * (h.h11 * ry - h.h12 * rx) / h.det;
  const auto S11 = to_double(-partial(Z1, Axis::x)), S12 = to_double(-partial(Z1, Axis::y));
  const auto S21 = to_double(-partial(Z2, Axis::x)), S22 = to_double(-partial(Z2, Axis::y));

  const auto& c = psi.chart();
  ShapeEstimate out;
  out.interior_margin = std::max({effective_margin(S11), effective_margin(S12),
                                  effective_margin(S21), effective_margin(S22)});
  const int m = out.interior_margin;
  if (c.nx() - 2 * m < 1 || c.ny() - 2 * m < 1) throw DomainError("grid too small for fit");
  double sum = 0.0;
  int count = 0;
  for (int j = m; j < c.ny() - m; ++j)
    for (int i = m; i < c.nx() - m; ++i) {
      sum += 0.5 * (S11(i, j) + S22(i, j));
      ++count;
    }
  out.lambda = sum / count;
  for (int j = m; j < c.ny() - m; ++j)
    for (int i = m; i < c.nx() - m; ++i)
      out.fit_residual = std::max({out.fit_residual, std::abs(S11(i, j) - out.lambda),
                                   std::abs(S22(i, j) - out.lambda), std::abs(S12(i, j)),
                                   std::abs(S21(i, j))});
  out.warning = out.fit_residual > 0.05 * std::abs(out.lambda) + 1e-3;
  return out;
}

}  // namespace detail

/// Affine normal of the graph and least-squares fit of S = lambda id
/// (lambda = interior mean of tr S / 2).
inline ShapeEstimate estimate_shape(const GraphPatch& patch) {
  if (patch.expression) return detail::estimate_shape(detail::sample_quad(patch));
  return detail::estimate_shape(patch.psi);
}

}  // namespace blaschke
