#pragma once

// End-to-end runs shared by the command-line tool and the acceptance suite:
// metric -> K -> residuals -> frame -> mesh, the harmonic factory, the graph
// round trip and the named convergence cases.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blaschke/connection.hpp"
#include "blaschke/convergence.hpp"
#include "blaschke/expression.hpp"
#include "blaschke/factory.hpp"
#include "blaschke/frame.hpp"
#include "blaschke/grid.hpp"
#include "blaschke/oracle.hpp"
#include "blaschke/pick.hpp"
#include "blaschke/realizability.hpp"

namespace blaschke {

inline ConformalMetric metric_from_expression(const std::string& text,
                                              const IsothermalChart& chart) {
  return ConformalMetric(expr::evaluate(expr::parse_expression(text), chart));
}

// ---------------------------------------------------------------------------
// Harmonic factory

struct FactorySpec {
  std::string harmonic = "constant";
  std::vector<double> params;
  int curvature_sign = -1;
  double lambda = 0.0;
};

/// Chart used by the factory convergence cases. The -2 factor blows up on the
/// unit circle; on [-0.2, 0.2]^2 its high derivatives stay moderate and the
/// residuals are in the asymptotic O(h^2) regime from 32^2 on.
inline IsothermalChart factory_chart(int n) { return {{-0.2, 0.2}, {-0.2, 0.2}, n, n, 1}; }

struct FactoryResult {
  ScalarField h;
  ScalarField c;
  FactoryMetric metric;
  double improper_residual = 0.0;  // interior max of improper_condition_residual
};

inline FactoryResult build_factory(const FactorySpec& spec, const IsothermalChart& chart) {
  auto h = harmonic_preset(spec.harmonic, spec.params, chart);
  auto c = constant_curvature_factor(spec.curvature_sign, chart);
  auto metric = blaschke_from_harmonic(h, c);
  const double res =
      interior_max_abs(improper_condition_residual(h, c, spec.lambda, spec.curvature_sign));
  return {std::move(h), std::move(c), std::move(metric), res};
}

// ---------------------------------------------------------------------------
// Construction and reconstruction

struct SphereRun {
  ConformalMetric g;
  double lambda = 0.0;
  PickConstruction pick;
  SphereCheck check;
  FirstOrderResidual first_order;
};

inline SphereRun construct_sphere(const ConformalMetric& g, const PickOptions& opt) {
  auto pick = construct_pick(g, opt);
  auto check = sphere_residual(g, pick.K, opt.lambda);
  auto first = first_order_residual(pick.K, g);
  return {g, opt.lambda, std::move(pick), std::move(check), std::move(first)};
}

struct Reconstruction {
  StructureMatrices A;
  double compatibility = 0.0;
  FrameField frame;
  ImmersionReport report;
};

inline Reconstruction reconstruct(const ConformalMetric& g, const ChristoffelField& gamma,
                                  double lambda, std::optional<GridIndex> base = std::nullopt) {
  auto A = structure_matrices(gamma, g, lambda);
  const double compat = interior_max_abs(compatibility_residual(A));
  const GridIndex p = base.value_or(center_index(g.chart()));
  auto frame = integrate_frame(A, default_initial_frame(g, p), p, lambda, &g);
  auto report = verify_immersion(frame, g, gamma);
  return {std::move(A), compat, std::move(frame), report};
}

inline Reconstruction reconstruct(const SphereRun& run) {
  return reconstruct(run.g, run.check.gamma, run.lambda, run.pick.potential.basepoint);
}

// ---------------------------------------------------------------------------
// Graph round trip (improper spheres: xi = e3)

inline ParametricGraph graph_from_frame(const FrameField& f) {
  if (!f.chart) throw DomainError("frame carries no chart");
  std::vector<double> X(f.position.size()), Y(X.size()), Z(X.size());
  for (std::size_t k = 0; k < X.size(); ++k) {
    X[k] = f.position[k].x();
    Y[k] = f.position[k].y();
    Z[k] = f.position[k].z();
  }
  const auto& c = *f.chart;
  return {ScalarField(c, std::move(X), f.band), ScalarField(c, std::move(Y), f.band),
          ScalarField(c, std::move(Z), f.band)};
}

struct RoundTrip {
  BlaschkeData data;          // Blaschke metric of the re-imported graph, (u, v) components
  double max_relative_error;  // max_ij |G_ij - g_ij| / e^phi over the interior
};

/// Extracts the surface as a graph over the xy-plane and recomputes its
/// Blaschke metric with the oracle formulas.
inline RoundTrip round_trip(const ConformalMetric& g, const FrameField& frame) {
  if (g.epsilon() != 1) throw DomainError("round trip is implemented for definite metrics");
  auto data = blaschke_normalize(parametric_hessian(graph_from_frame(frame)));
  const auto e = g.conformal_factor();
  const double err = std::max({interior_max_abs((data.G11 - e) / e),
                               interior_max_abs(data.G12 / e),
                               interior_max_abs((data.G22 - e) / e)});
  return {std::move(data), err};
}

// ---------------------------------------------------------------------------
// Named convergence cases

struct ConvergenceRow {
  int grid;
  std::string kind;
  double value;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::vector<std::pair<std::string, OrderFit>> orders;

  bool passes(double min_order) const {
    for (const auto& [kind, fit] : orders)
      if (!fit.passes(min_order)) return false;
    return true;
  }
};

inline const std::vector<std::string>& convergence_case_names() {
  static const std::vector<std::string> names = {"factory_h0",     "factory_linear",
                                                 "factory_saddle", "factory_exp_cos",
                                                 "flat_lambda_m1", "xyz1_oracle"};
  return names;
}

namespace detail {

inline std::vector<std::pair<std::string, double>> factory_case(const std::string& preset,
                                                                int n) {
  FactorySpec spec;
  spec.harmonic = preset;
  const auto chart = factory_chart(n);
  auto fac = build_factory(spec, chart);
  const auto& g = fac.metric.g;
  PickOptions opt;
  opt.lambda = 0.0;
  const auto run = construct_sphere(g, opt);
  const auto rec = reconstruct(run);
  const auto rt = round_trip(g, rec.frame);
  return {{"condition", condition_residual(g, 0.0).report.max_residual},
          {"exactness", run.pick.potential.exactness_max},
          {"first_order", interior_max_abs(run.first_order.magnitude())},
          {"gauss", run.check.report.gauss_max()},
          {"egregium", run.check.report.egregium},
          {"compatibility", rec.compatibility},
          {"round_trip", rt.max_relative_error}};
}

inline std::vector<std::pair<std::string, double>> flat_case(int n) {
  const IsothermalChart chart({-0.5, 0.5}, {-0.5, 0.5}, n, n, 1);
  const ConformalMetric g(ScalarField::constant(chart, 0.0));
  PickOptions opt;
  opt.lambda = -1.0;
  const auto run = construct_sphere(g, opt);
  const auto rec = reconstruct(run);
  return {{"condition", condition_residual(g, -1.0).report.max_residual},
          {"gauss", run.check.report.gauss_max()},
          {"egregium", run.check.report.egregium},
          {"compatibility", rec.compatibility}};
}

inline std::vector<std::pair<std::string, double>> xyz_case(int n) {
  const IsothermalChart chart({0.9, 1.1}, {0.9, 1.1}, n, n, 1);
  const auto patch = graph_from_expression("1/(x*y)", chart);
  auto data = blaschke_data(patch);
  const auto shape = estimate_shape(patch);
  const auto report = necessity_test(data, shape.lambda);
  return {{"kappa", interior_max_abs(data.kappa)},
          {"necessity", report.max_residual},
          {"shape_fit", shape.fit_residual}};
}

}  // namespace detail

inline ConvergenceResult run_convergence(const std::string& name, const std::vector<int>& grids) {
  if (grids.size() < 2) throw DomainError("a convergence study needs at least two grids");
  ConvergenceResult out;
  std::vector<double> hs;
  for (int n : grids) {
    std::vector<std::pair<std::string, double>> res;
    double span = 0.0;
    if (name.rfind("factory_", 0) == 0) {
      std::string preset = name.substr(8);
      if (preset == "h0") preset = "constant";
      res = detail::factory_case(preset, n);
      span = 0.4;
    } else if (name == "flat_lambda_m1") {
      res = detail::flat_case(n);
      span = 1.0;
    } else if (name == "xyz1_oracle") {
      res = detail::xyz_case(n);
      span = 0.2;
    } else {
      throw DomainError("unknown convergence case '" + name + "'");
    }
    hs.push_back(span / (n - 1));
    for (auto& [kind, v] : res) out.rows.push_back({n, kind, v});
  }
  std::vector<std::string> kinds;
  for (const auto& r : out.rows)
    if (r.grid == grids.front()) kinds.push_back(r.kind);
  for (const auto& kind : kinds) {
    std::vector<double> v;
    for (const auto& r : out.rows)
      if (r.kind == kind) v.push_back(r.value);
    out.orders.emplace_back(kind, fit_order(hs, v));
  }
  return out;
}

}  // namespace blaschke
