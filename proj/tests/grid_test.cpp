#include <gtest/gtest.h>

#include <cmath>

#include "blaschke/grid.hpp"

using namespace blaschke;

namespace {

IsothermalChart square(double lo, double hi, int n, int eps = 1) {
  return {{lo, hi}, {lo, hi}, n, n, eps};
}

double max_err(const ScalarField& f, double (*exact)(double, double)) {
  double worst = 0.0;
  const auto& c = f.chart();
  for (int j = 0; j < c.ny(); ++j)
    for (int i = 0; i < c.nx(); ++i)
      worst = std::max(worst, std::abs(f(i, j) - exact(c.x(i), c.y(j))));
  return worst;
}

}  // namespace

TEST(Chart, RejectsTinyGrids) {
  EXPECT_THROW(IsothermalChart({0, 1}, {0, 1}, 4, 9), DomainError);
  EXPECT_THROW(IsothermalChart({0, 1}, {1, 1}, 9, 9), DomainError);
  EXPECT_THROW(IsothermalChart({0, 1}, {0, 1}, 9, 9, 0), DomainError);
}

TEST(Chart, EndpointsExact) {
  const auto c = square(-0.3, 0.7, 11);
  EXPECT_EQ(c.x(0), -0.3);
  EXPECT_EQ(c.x(10), 0.7);
  EXPECT_NEAR(c.hx(), 0.1, 1e-15);
}

TEST(Field, RejectsNonFinite) {
  const auto c = square(0, 1, 5);
  std::vector<double> v(25, 0.0);
  v[7] = std::nan("");
  EXPECT_THROW(ScalarField(c, v), DegenerateError);
}

TEST(Partial, LinearAndConstantExact) {
  const auto c = square(-1, 2, 9);
  auto f = ScalarField::sample(c, [](double x, double) { return x; });
  EXPECT_LT(max_abs(partial(f, Axis::x) - 1.0), 1e-13);
  auto k = ScalarField::constant(c, 3.5);
  EXPECT_EQ(max_abs(partial(k, Axis::y)), 0.0);
}

// quadratics are differentiated exactly everywhere, boundaries included
TEST(Partial, QuadraticsExactIncludingBoundary) {
  const auto c = square(-1.3, 0.9, 13);
  auto f = ScalarField::sample(c, [](double x, double y) {
    return 0.7 * x * x - 1.1 * x * y + 2.0 * y * y + 0.4 * x - y + 3.0;
  });
  auto fx = partial(f, Axis::x);
  auto fy = partial(f, Axis::y);
  EXPECT_LT(max_err(fx, [](double x, double y) { return 1.4 * x - 1.1 * y + 0.4; }), 1e-12);
  EXPECT_LT(max_err(fy, [](double x, double y) { return -1.1 * x + 4.0 * y - 1.0; }), 1e-12);
  EXPECT_LT(max_abs(second_partial(f, Axis::x) - 1.4), 1e-11);
  EXPECT_LT(max_abs(mixed_partial(f) + 1.1), 1e-11);
  EXPECT_LT(max_abs(flat_laplacian(f) - 5.4), 1e-11);
}

TEST(Partial, SinAtOriginSecondOrder) {
  double prev = 0.0;
  for (int n : {17, 33, 65}) {
    const auto c = square(-1, 1, n);
    auto d = partial(ScalarField::sample(c, [](double x, double) { return std::sin(x); }), Axis::x);
    const double err = std::abs(d((n - 1) / 2, 0) - 1.0);
    EXPECT_LT(err, c.h_max() * c.h_max());
    if (prev > 0) {
      EXPECT_GT(prev / err, 3.5);
    }
    prev = err;
  }
}

TEST(FlatLaplacian, Examples) {
  const auto c = square(-1, 1, 9);
  auto r2 = ScalarField::sample(c, [](double x, double y) { return x * x + y * y; });
  EXPECT_LT(max_abs(flat_laplacian(r2) - 4.0), 1e-12);
  auto xy = ScalarField::sample(c, [](double x, double y) { return x * y; });
  EXPECT_LT(max_abs(flat_laplacian(xy)), 1e-12);
  // eps = -1: x^2 + y^2 -> 2 - 2 = 0
  auto r2m = ScalarField::sample(square(-1, 1, 9, -1), [](double x, double y) { return x * x + y * y; });
  EXPECT_LT(max_abs(flat_laplacian(r2m)), 1e-12);
}

TEST(FlatLaplacian, ExpCosConvergesSecondOrder) {
  double prev = 0.0;
  for (int n : {17, 33, 65, 129}) {
    auto f = ScalarField::sample(square(-1, 1, n),
                                 [](double x, double y) { return std::exp(x) * std::cos(y); });
    const double err = max_abs(flat_laplacian(f));
    if (prev > 0) {
      EXPECT_GE(prev / err, 3.5) << n;
    }
    prev = err;
  }
}

TEST(LaplaceBeltrami, UnitFactorIsFlat) {
  const auto c = square(-1, 1, 17);
  auto f = ScalarField::sample(c, [](double x, double y) { return std::sin(x) * y * y; });
  ConformalMetric g(ScalarField::constant(c, 0.0));
  EXPECT_LT(max_abs_difference(laplace_beltrami(f, g), flat_laplacian(f)), 1e-15);
}

TEST(LaplaceBeltrami, ConstantRescale) {
  const auto c = square(-1, 1, 9);
  auto f = ScalarField::sample(c, [](double x, double y) { return x * x + y * y; });
  ConformalMetric g(ScalarField::constant(c, std::log(4.0)));
  EXPECT_LT(max_abs(laplace_beltrami(f, g) - 1.0), 1e-12);
}

// Delta x^2 = 2 e^{-phi} = 2 (1 + r^2/4)^2 for the round-sphere factor (sympy)
TEST(LaplaceBeltrami, SphereFactorAgainstSymbolic) {
  const auto c = square(-0.5, 0.5, 101);
  ConformalMetric g(ScalarField::sample(
      c, [](double x, double y) { return -2.0 * std::log(1.0 + (x * x + y * y) / 4.0); }));
  auto f = ScalarField::sample(c, [](double x, double) { return x * x; });
  auto lb = laplace_beltrami(f, g);
  EXPECT_LT(max_err(lb, [](double x, double y) {
              const double q = 1.0 + (x * x + y * y) / 4.0;
              return 2.0 * q * q;
            }),
            1e-10);
  // sympy at (0.3, -0.2)
  EXPECT_NEAR(lb(80, 30), 2.1321125, 1e-10);
  auto fx = ScalarField::sample(c, [](double x, double) { return x; });
  EXPECT_LT(max_abs(laplace_beltrami(fx, g)), 1e-10);
}

TEST(GaussianCurvature, FlatAndSphere) {
  const auto c = square(-0.5, 0.5, 33);
  EXPECT_EQ(max_abs(gaussian_curvature(ConformalMetric(ScalarField::constant(c, 0.0)))), 0.0);
  double prev = 0.0;
  for (int n : {33, 65, 129}) {
    ConformalMetric g(ScalarField::sample(square(-0.5, 0.5, n), [](double x, double y) {
      return -2.0 * std::log(1.0 + (x * x + y * y) / 4.0);
    }));
    const double err = max_abs(gaussian_curvature(g) - 1.0);
    EXPECT_LT(err, 2.0 * g.chart().h_max() * g.chart().h_max());
    if (prev > 0) {
      EXPECT_GT(prev / err, 3.5);
    }
    prev = err;
  }
}

// dx^2 + cosh^2(x) dy^2 has curvature -1
TEST(Brioschi, NonConformalMetric) {
  for (int n : {65, 129}) {
    const auto c = square(-0.5, 0.5, n);
    auto one = ScalarField::constant(c, 1.0);
    auto zero = ScalarField::constant(c, 0.0);
    auto G22 = ScalarField::sample(c, [](double x, double) { return std::pow(std::cosh(x), 2); });
    EXPECT_LT(interior_max_abs(brioschi_curvature(one, zero, G22) + 1.0),
              10.0 * c.h_max() * c.h_max());
  }
}

TEST(Brioschi, AgreesWithConformalCurvature) {
  for (int eps : {1, -1}) {
    const auto c = square(-0.4, 0.4, 65, eps);
    ConformalMetric g(ScalarField::sample(
        c, [](double x, double y) { return 0.3 * std::sin(x + 2 * y) + 0.2 * x * x; }));
    const auto e = g.conformal_factor();
    const auto k = gaussian_curvature(g);
    const auto b = brioschi_curvature(e, ScalarField::constant(c, 0.0), double(eps) * e);
    // both are O(h^2) approximations; stencil truncation ~ h^2 |phi''''|
    EXPECT_LT(interior_max_abs(k - b), 10.0 * c.h_max() * c.h_max()) << eps;
  }
}

TEST(Metric, VolumeDensity) {
  const auto c = square(-1, 1, 9, -1);
  ConformalMetric g(ScalarField::sample(c, [](double x, double y) { return x - y; }));
  for (int n = 0; n < c.size(); ++n) {
    const double e = g.conformal_factor()[n];
    const double det = e * (c.epsilon() * e);
    EXPECT_NEAR(std::abs(det), std::exp(2 * g.phi()[n]), 1e-12 * std::abs(det));
    EXPECT_EQ(g.volume_density()[n], e);
  }
}

TEST(FieldJson, RoundTripKeepsBand) {
  const auto c = IsothermalChart({-1, 2}, {0, 1}, 7, 5, -1);
  auto f = partial(ScalarField::sample(c, [](double x, double y) { return x * y; }), Axis::x);
  auto j = to_json(f);
  EXPECT_EQ(j.at("nx"), 7);
  EXPECT_EQ(j.at("epsilon"), -1);
  auto back = field_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.band(), f.band());
  EXPECT_TRUE(back.chart() == c);
  EXPECT_EQ(max_abs_difference(back, f), 0.0);
}

TEST(Norms, InteriorSkipsBand) {
  const auto c = square(0, 1, 9);
  std::vector<double> v(c.size(), 0.0);
  v[c.index(0, 4)] = 100.0;
  v[c.index(4, 4)] = 1.0;
  ScalarField f(c, v);
  EXPECT_EQ(interior_max_abs(f), 1.0);
  EXPECT_EQ(max_abs(f), 100.0);
}
