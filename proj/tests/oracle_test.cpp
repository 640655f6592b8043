#include <gtest/gtest.h>

#include <cmath>

#include "blaschke/oracle.hpp"
#include "support.hpp"

using namespace blaschke;
using namespace testing_support;

namespace {

IsothermalChart xyz_chart(int n) { return square(0.9, 1.1, n); }

}  // namespace

TEST(Hessian, Quadrics) {
  const auto c = square(-1, 1, 9);
  const auto h = hessian_metric(graph_from_expression("(x^2+y^2)/2", c));
  EXPECT_LE(max_abs(h.h11 - 1.0), 1e-12);
  EXPECT_LE(max_abs(h.h12), 1e-12);
  EXPECT_LE(max_abs(h.det - 1.0), 1e-12);
  const auto k = hessian_metric(graph_from_expression("x*y", c));
  EXPECT_LE(max_abs(k.h12 - 1.0), 1e-12);
  EXPECT_LE(max_abs(k.h11) + max_abs(k.h22), 1e-12);
  EXPECT_LE(max_abs(k.det + 1.0), 1e-12);
}

// d^2 (xy)^{-1}: h11 = 2/(x^3 y), h12 = 1/(x y)^2, h22 = 2/(x y^3); at (1,1): 2, 1, 2, det 3
TEST(Hessian, InverseProductAtOne) {
  const auto c = xyz_chart(129);
  const auto h = hessian_metric(graph_from_expression("1/(x*y)", c));
  EXPECT_NEAR(h.h11(64, 64), 2.0, 1e-4);
  EXPECT_NEAR(h.h22(64, 64), 2.0, 1e-4);
  EXPECT_NEAR(h.h12(64, 64), 1.0, 1e-4);
  EXPECT_NEAR(h.det(64, 64), 3.0, 1e-4);
}

TEST(Hessian, DegeneratePatchRejected) {
  EXPECT_THROW(hessian_metric(graph_from_expression("x + y", square(0, 1, 9))), DegenerateError);
  EXPECT_THROW(hessian_metric(graph_from_expression("x^2", square(0, 1, 9))), DegenerateError);
}

TEST(Normalize, UnitDeterminantUnchanged) {
  const auto d = blaschke_data(graph_from_expression("(x^2+y^2)/2", square(-1, 1, 17)));
  EXPECT_LE(max_abs(d.G11 - 1.0), 1e-12);
  EXPECT_LE(max_abs(d.G22 - 1.0), 1e-12);
  EXPECT_LE(max_abs(d.kappa), 1e-10);
}

TEST(Normalize, InverseProductMetricAtOne) {
  const auto d = blaschke_data(graph_from_expression("1/(x*y)", xyz_chart(129)));
  EXPECT_NEAR(d.G11(64, 64), 2.0 * std::pow(3.0, -0.25), 1e-4);
  EXPECT_NEAR(d.G11(64, 64), 1.5197, 1e-4);
}

TEST(Normalize, ScalingLawAndDeterminant) {
  const auto h = hessian_metric(graph_from_expression("exp(x) + y^2 + 0.3*x*y", square(0, 1, 17)));
  const double s = 2.5;
  const HessianField hs{s * h.h11, s * h.h12, s * h.h22, s * s * h.det};
  const auto a = blaschke_normalize(h), b = blaschke_normalize(hs);
  EXPECT_LE(max_abs(b.G11 - std::sqrt(s) * a.G11), 1e-13);
  EXPECT_LE(max_abs(b.G12 - std::sqrt(s) * a.G12), 1e-13);
  EXPECT_LE(max_abs(b.G22 - std::sqrt(s) * a.G22), 1e-13);
  const auto detG = a.G11 * a.G22 - a.G12 * a.G12;
  const auto root = map(h.det, [](double d) { return std::sqrt(std::abs(d)); });
  EXPECT_LE(max_abs(detG - root), 1e-13);
}

// graph reparametrized by X = u + 0.1 v^2, Y = v: the xy-Hessian comes back
TEST(Parametric, AgreesWithClosedForm) {
  const auto c = xyz_chart(65);
  auto X = ScalarField::sample(c, [](double u, double v) { return u + 0.1 * v * v; });
  auto Y = ScalarField::sample(c, [](double, double v) { return v; });
  auto Z = ScalarField::sample(c, [](double u, double v) { return 1.0 / ((u + 0.1 * v * v) * v); });
  const auto h = parametric_hessian({X, Y, Z});
  const auto det = ScalarField::sample(c, [](double u, double v) {
    const double x = u + 0.1 * v * v;
    return 3.0 / std::pow(x * v, 4);
  });
  const auto h11 = ScalarField::sample(c, [](double u, double v) {
    const double x = u + 0.1 * v * v;
    return 2.0 / (x * x * x * v);
  });
  EXPECT_LE(interior_max_abs(h.det - det), 1e-3);
  EXPECT_LE(interior_max_abs(h.h11 - h11), 1e-3);
}

TEST(Parametric, IdentityParametrizationMatchesHessianMetric) {
  const auto c = xyz_chart(33);
  const auto patch = graph_from_expression("1/(x*y)", c);
  const auto X = ScalarField::sample(c, [](double x, double) { return x; });
  const auto Y = ScalarField::sample(c, [](double, double y) { return y; });
  const auto a = parametric_hessian({X, Y, patch.psi});
  const auto b = hessian_metric(GraphPatch{patch.psi, "samples", nullptr});
  EXPECT_LE(max_abs(a.h11 - b.h11), 1e-9);
  EXPECT_LE(max_abs(a.h12 - b.h12), 1e-9);
  EXPECT_LE(max_abs(a.det - b.det), 1e-8);
}

TEST(Kappa, InverseProductIsFlat) {
  double prev = 0.0;
  for (int n : {32, 64, 128}) {
    const auto d = blaschke_data(graph_from_expression("1/(x*y)", xyz_chart(n)));
    const double k = interior_max_abs(d.kappa);
    if (n == 128) {
      EXPECT_LE(k, 5e-3);
    }
    if (prev > 0) {
      EXPECT_GE(prev / k, 3.5) << n;
    }
    prev = k;
  }
}

// S = -3^{-3/4} id at (1,1) (sympy); the surface is a sphere, so everywhere
TEST(Shape, InverseProductIsProperSphere) {
  const auto s = estimate_shape(graph_from_expression("1/(x*y)", xyz_chart(128)));
  EXPECT_NEAR(s.lambda, -0.43869133765083082, 1e-4);
  EXPECT_LE(s.fit_residual, 1e-3);
  EXPECT_FALSE(s.warning);
  const auto j = to_json(s);
  EXPECT_TRUE(j.contains("fit_residual"));
}

TEST(Shape, QuadricIsImproper) {
  const auto s = estimate_shape(graph_from_expression("(x^2+y^2)/2", square(-1, 1, 33)));
  EXPECT_LE(std::abs(s.lambda), 1e-6);
  EXPECT_LE(s.fit_residual, 1e-6);
  EXPECT_FALSE(s.warning);
}

TEST(Shape, QuarticIsNotASphere) {
  const auto s = estimate_shape(graph_from_expression("x^4 + y^4", square(0.5, 1.5, 64)));
  EXPECT_TRUE(s.warning);
}

TEST(Necessity, InverseProductConverges) {
  const auto fit = order_over({32, 64, 128}, 0.2, [](int n) {
    const auto patch = graph_from_expression("1/(x*y)", xyz_chart(n));
    auto d = blaschke_data(patch);
    return necessity_test(d, estimate_shape(patch).lambda).max_residual;
  });
  ASSERT_TRUE(fit.order);
  EXPECT_GE(*fit.order, 1.5);
}

TEST(Necessity, SetsLambdaAndJ) {
  const auto patch = graph_from_expression("1/(x*y)", xyz_chart(64));
  auto d = blaschke_data(patch);
  const double lambda = estimate_shape(patch).lambda;
  necessity_test(d, lambda);
  EXPECT_EQ(d.lambda, lambda);
  EXPECT_LE(max_abs(d.J_proxy - (d.kappa - lambda)), 0.0);
  // J = kappa - lambda ~ 3^{-3/4} > 0
  EXPECT_GT(min_abs(d.J_proxy), 0.4);
}

TEST(Necessity, QuadricIsDegenerate) {
  auto d = blaschke_data(graph_from_expression("(x^2+y^2)/2", square(-1, 1, 17)));
  EXPECT_THROW(necessity_test(d, 0.0), DegenerateError);
}

TEST(Oracle, DoubleSamplesAgreeWithQuad) {
  const auto patch = graph_from_expression("1/(x*y)", xyz_chart(32));
  const auto q = blaschke_data(patch);
  const auto d = blaschke_data(GraphPatch{patch.psi, "samples", nullptr});
  EXPECT_LE(max_abs(q.G11 - d.G11), 1e-8);
  EXPECT_LE(interior_max_abs(q.kappa - d.kappa), 1e-2);
}
