#pragma once

// Construction of the difference tensor K of an affine sphere with prescribed
// Blaschke metric g = e^phi (dx^2 + eps dy^2) and shape operator lambda id.
//
// Only K^1_12 and K^2_21 are free. With L = (kappa - lambda) e^phi / 2 the
// direction of (K^1_12, K^2_21) is carried by a potential F whose gradient is
// the closed 1-form
//
//     omega = (-eps (ln|L|/2 + phi)_y, (ln|L|/2 + phi)_x),
//
// (scaled by 2 when eps = -1, see potential_scale). F is parametrized as an
// angle (eps = 1) or a rapidity (eps = -1) so that K never has to be obtained
// by dividing by K^2_21.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "blaschke/error.hpp"
#include "blaschke/grid.hpp"
#include "blaschke/realizability.hpp"

namespace blaschke {

/// L = (kappa - lambda) e^phi / 2. For a definite metric L is a sum of squares
/// and must be positive.
inline ScalarField compute_L(const ConformalMetric& g, double lambda,
                             double tol = kDegeneracyTolerance) {
  const auto gap = kappa_minus_lambda(gaussian_curvature(g), lambda, tol);
  if (g.epsilon() == 1) {
    const auto& c = gap.chart();
    for (int j = 0; j < c.ny(); ++j)
      for (int i = 0; i < c.nx(); ++i)
        if (gap(i, j) < 0.0)
          throw SignError("kappa - lambda < 0 for a definite metric at (" +
                          std::to_string(c.x(i)) + ", " + std::to_string(c.y(j)) +
                          "): no real difference tensor exists");
  }
  return 0.5 * gap * g.conformal_factor();
}

struct OneForm {
  ScalarField first;   // dx component
  ScalarField second;  // dy component

  OneForm scaled(double s) const { return {s * first, s * second}; }
};

/// The closed 1-form whose potential carries the direction of K.
inline OneForm potential_one_form(const ScalarField& L, const ConformalMetric& g) {
  require_same_grid(L, g);
  const double eps = g.epsilon();
  const auto u = zip(L, g.phi(), [](double l, double p) {
    if (l == 0.0) throw DomainError("L vanishes");
    return 0.5 * std::log(std::abs(l)) + p;
  });
  return {-eps * partial(u, Axis::y), partial(u, Axis::x)};
}

/// Scale between omega and the potential F used by assemble_K: F is the
/// angle for eps = 1 and F = ln|(l - 1)/(l + 1)| = -2 * rapidity for eps = -1,
/// whose gradient is 2 omega.
inline double potential_scale(int epsilon) { return epsilon == 1 ? 1.0 : 2.0; }

/// Discrete curl d omega_1/dy - d omega_2/dx.
inline ScalarField exactness_residual(const OneForm& w) {
  require_same_grid(w.first, w.second);
  return partial(w.first, Axis::y) - partial(w.second, Axis::x);
}

struct GridIndex {
  int i = 0;
  int j = 0;
};

inline GridIndex center_index(const IsothermalChart& c) {
  return {(c.nx() - 1) / 2, (c.ny() - 1) / 2};
}

struct Potential {
  ScalarField F;
  /// max |F - F_T| where F_T is integrated column-first.
  double path_defect = 0.0;
  double exactness_max = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

// Trapezoid line integration from the basepoint; `row_first` selects which
// axis is walked first.
inline ScalarField staircase(const OneForm& w, GridIndex base, double F0,
                             bool row_first) {
  const auto& c = w.first.chart();
  const int nx = c.nx(), ny = c.ny();
  const double hx = c.hx(), hy = c.hy();
  std::vector<double> F(c.size());
  auto at = [&](int i, int j) -> double& { return F[c.index(i, j)]; };
  auto step_x = [&](int j, int from, int to) {
    at(to, j) = at(from, j) + 0.5 * (to - from) * hx * (w.first(from, j) + w.first(to, j));
  };
  auto step_y = [&](int i, int from, int to) {
    at(i, to) = at(i, from) + 0.5 * (to - from) * hy * (w.second(i, from) + w.second(i, to));
  };
  at(base.i, base.j) = F0;
  if (row_first) {
    for (int i = base.i + 1; i < nx; ++i) step_x(base.j, i - 1, i);
    for (int i = base.i - 1; i >= 0; --i) step_x(base.j, i + 1, i);
    for (int i = 0; i < nx; ++i) {
      for (int j = base.j + 1; j < ny; ++j) step_y(i, j - 1, j);
      for (int j = base.j - 1; j >= 0; --j) step_y(i, j + 1, j);
    }
  } else {
    for (int j = base.j + 1; j < ny; ++j) step_y(base.i, j - 1, j);
    for (int j = base.j - 1; j >= 0; --j) step_y(base.i, j + 1, j);
    for (int j = 0; j < ny; ++j) {
      for (int i = base.i + 1; i < nx; ++i) step_x(j, i - 1, i);
      for (int i = base.i - 1; i >= 0; --i) step_x(j, i + 1, i);
    }
  }
  return ScalarField(c, std::move(F), std::max(w.first.band(), w.second.band()));
}

}  // namespace detail

/// Potential F of omega with F(base) = F0: trapezoid rule along the basepoint
/// row, then down every column. The column-first path is computed as well and
/// their largest discrepancy reported as path_defect.
inline Potential integrate_potential(const OneForm& w, GridIndex base, double F0) {
  require_same_grid(w.first, w.second);
  const auto& c = w.first.chart();
  if (base.i < 0 || base.i >= c.nx() || base.j < 0 || base.j >= c.ny())
    throw DomainError("basepoint outside the grid");
  Potential out{detail::staircase(w, base, F0, true), 0.0, 0.0, {}};
  const auto transposed = detail::staircase(w, base, F0, false);
  out.path_defect = max_abs_difference(out.F, transposed);

  const auto curl = exactness_residual(w);
  out.exactness_max = interior_max_abs(curl);
  // Expected truncation level of a closed form sampled with O(h^2) stencils.
  const double scale = 1.0 + std::max(max_abs(w.first), max_abs(w.second));
  const double bound = 10.0 * c.h_max() * c.h_max() * scale;
  if (out.exactness_max > bound)
    out.warnings.push_back("1-form is not closed to truncation accuracy: curl " +
                           std::to_string(out.exactness_max) + " > " +
                           std::to_string(bound));
  return out;
}

/// Branch of the indefinite construction: inner means |l| < 1 (K^2_21
/// dominant, L > 0), outer means |l| > 1 (K^1_12 dominant, L < 0).
enum class DirectionBranch { inner, outer };

inline DirectionBranch branch_for(const ScalarField& L) {
  const bool positive = L[0] > 0.0;
  for (double v : L.values())
    if ((v > 0.0) != positive)
      throw BranchError("L changes sign on the chart");
  return positive ? DirectionBranch::inner : DirectionBranch::outer;
}

/// l = K^1_12 / K^2_21 from the potential: tan F (eps = 1), tanh(-F/2) on the
/// inner and coth(-F/2) on the outer indefinite branch.
inline ScalarField recover_direction(const ScalarField& F, int epsilon,
                                     DirectionBranch branch = DirectionBranch::inner) {
  if (epsilon == 1) return map(F, [](double f) { return std::tan(f); });
  if (branch == DirectionBranch::inner)
    return map(F, [](double f) { return std::tanh(-0.5 * f); });
  return map(F, [](double f) { return 1.0 / std::tanh(-0.5 * f); });
}

/// Inverse of recover_direction at one point: F0 with l(p) = beta.
inline double potential_from_direction(double beta, int epsilon,
                                       DirectionBranch branch = DirectionBranch::inner) {
  if (epsilon == 1) return std::atan(beta);
  if (std::abs(beta * beta - 1.0) < 1e-14)
    throw BranchError("beta^2 = 1 is excluded for indefinite metrics (J would vanish)");
  const bool inner = std::abs(beta) < 1.0;
  if (inner != (branch == DirectionBranch::inner))
    throw BranchError(inner ? "|beta| < 1 requires L > 0" : "|beta| > 1 requires L < 0");
  return std::log(std::abs((beta - 1.0) / (beta + 1.0)));
}

/// Difference tensor K = nabla - hat nabla in isothermal coordinates. All six
/// components K^k_ij (symmetric in i, j) are stored so that tests can corrupt
/// individual ones; tensors built by from_free satisfy g-symmetry
/// (K^2_21 = eps K^1_22, K^1_12 = eps K^2_11) and apolarity
/// (K^1_11 + K^2_21 = 0, K^1_12 + K^2_22 = 0) exactly.
class DifferenceTensor {
 public:
  static DifferenceTensor from_free(const ScalarField& K112, const ScalarField& K221,
                                    int epsilon, int sign = 1) {
    require_same_grid(K112, K221);
    const double eps = epsilon;
    // slot order per upper index: (1,1), (1,2), (2,2)
    return DifferenceTensor({-K221, K112, eps * K221}, {eps * K112, K221, -K112}, epsilon,
                            sign);
  }

  static DifferenceTensor zero(const IsothermalChart& chart) {
    const auto z = ScalarField::constant(chart, 0.0);
    return from_free(z, z, chart.epsilon());
  }

  /// K^k_ij, indices in {1, 2}.
  const ScalarField& component(int k, int i, int j) const {
    return (k == 1 ? upper1_ : upper2_)[slot(i, j)];
  }

  const ScalarField& K112() const { return component(1, 1, 2); }
  const ScalarField& K221() const { return component(2, 2, 1); }
  int sign() const { return sign_; }
  int epsilon() const { return epsilon_; }
  const IsothermalChart& chart() const { return upper1_[0].chart(); }

  /// Copy with K^k_ij (and K^k_ji) replaced.
  DifferenceTensor with_component(int k, int i, int j, ScalarField f) const {
    auto copy = *this;
    (k == 1 ? copy.upper1_ : copy.upper2_)[slot(i, j)] = std::move(f);
    return copy;
  }

  DifferenceTensor negated() const {
    return DifferenceTensor({-upper1_[0], -upper1_[1], -upper1_[2]},
                            {-upper2_[0], -upper2_[1], -upper2_[2]}, epsilon_, -sign_);
  }

 private:
  using Slots = std::array<ScalarField, 3>;
  DifferenceTensor(Slots u1, Slots u2, int epsilon, int sign)
      : upper1_(std::move(u1)), upper2_(std::move(u2)), epsilon_(epsilon), sign_(sign) {}

  static int slot(int i, int j) {
    if (i == 1 && j == 1) return 0;
    if (i == 2 && j == 2) return 2;
    return 1;
  }

  Slots upper1_, upper2_;
  int epsilon_;
  int sign_;
};

/// Smooth angle/rapidity parametrization of (K^1_12, K^2_21) from L and F:
///   eps = 1:          K^2_21 = s sqrt(L) cos F,       K^1_12 = s sqrt(L) sin F
///   eps = -1, L > 0:  K^2_21 = s sqrt(L) cosh(-F/2),  K^1_12 = s sqrt(L) sinh(-F/2)
///   eps = -1, L < 0:  K^1_12 = s sqrt(-L) cosh(-F/2), K^2_21 = s sqrt(-L) sinh(-F/2)
inline DifferenceTensor assemble_K(const ScalarField& L, const ScalarField& F, int epsilon,
                                   int sign = 1) {
  require_same_grid(L, F);
  if (sign != 1 && sign != -1) throw DomainError("sign must be +1 or -1");
  const double s = sign;
  const auto branch = branch_for(L);
  if (epsilon == 1 && branch != DirectionBranch::inner)
    throw BranchError("L must be positive for a definite metric");
  const auto root = map(L, [](double l) { return std::sqrt(std::abs(l)); });
  const IsothermalChart chart = L.chart().with_epsilon(epsilon);
  auto on = [&](ScalarField f) { return f.with_chart(chart); };
  if (epsilon == 1) {
    const auto q = s * root * map(F, [](double f) { return std::cos(f); });
    const auto p = s * root * map(F, [](double f) { return std::sin(f); });
    return DifferenceTensor::from_free(on(p), on(q), epsilon, sign);
  }
  const auto ch = map(F, [](double f) { return std::cosh(-0.5 * f); });
  const auto sh = map(F, [](double f) { return std::sinh(-0.5 * f); });
  if (branch == DirectionBranch::inner)
    return DifferenceTensor::from_free(on(s * root * sh), on(s * root * ch), epsilon, sign);
  return DifferenceTensor::from_free(on(s * root * ch), on(s * root * sh), epsilon, sign);
}

/// eps (K^1_12)^2 + (K^2_21)^2, which reproduces L on assembled tensors.
inline ScalarField pick_L(const DifferenceTensor& K) {
  const double eps = K.epsilon();
  return zip(K.K112(), K.K221(), [eps](double p, double q) { return eps * p * p + q * q; });
}

/// Pick invariant J = g(K, K) / 2, contracted from all eight components
/// (2 [eps (K^1_12)^2 + (K^2_21)^2] / e^phi on g-symmetric apolar tensors).
inline ScalarField pick_invariant(const DifferenceTensor& K, const ConformalMetric& g) {
  require_same_grid(K.K112(), g);
  const double eps = g.epsilon();
  const double sig[3] = {0.0, 1.0, eps};  // g_kk / e^phi
  std::vector<double> J(g.chart().size(), 0.0);
  int band = 0;
  for (int k = 1; k <= 2; ++k)
    for (int i = 1; i <= 2; ++i)
      for (int j = 1; j <= 2; ++j) {
        const auto& c = K.component(k, i, j);
        band = std::max(band, c.band());
        const double w = sig[k] / (sig[i] * sig[j]);
        for (std::size_t n = 0; n < J.size(); ++n) J[n] += w * c[static_cast<int>(n)] * c[static_cast<int>(n)];
      }
  for (std::size_t n = 0; n < J.size(); ++n) J[n] *= 0.5 / std::exp(g.phi()[static_cast<int>(n)]);
  return ScalarField(g.chart(), std::move(J), std::max(band, g.phi().band()));
}

struct PickOptions {
  double lambda = 0.0;
  /// l(p) = beta; when absent F(p) = F0 is used directly.
  std::optional<double> beta;
  double F0 = 0.0;
  std::optional<GridIndex> basepoint;  // default: grid center
  int sign = 1;
  double tol_deg = kDegeneracyTolerance;
};

/// Bookkeeping of one construction: L, omega, F, basepoint and initial data.
struct PickPotential {
  ScalarField L;
  OneForm omega;
  ScalarField F;
  GridIndex basepoint;
  double F0 = 0.0;
  std::optional<double> beta;
  double path_defect = 0.0;
  double exactness_max = 0.0;
  std::vector<std::string> warnings;
};

struct PickConstruction {
  PickPotential potential;
  DifferenceTensor K;
};

/// Full construction: L from the metric, omega, the potential F with the
/// requested initial condition, then K.
inline PickConstruction construct_pick(const ConformalMetric& g, const PickOptions& opt) {
  const int eps = g.epsilon();
  auto L = compute_L(g, opt.lambda, opt.tol_deg);
  const auto branch = branch_for(L);
  auto omega = potential_one_form(L, g);
  const GridIndex base = opt.basepoint.value_or(center_index(g.chart()));
  const double F0 = opt.beta ? potential_from_direction(*opt.beta, eps, branch) : opt.F0;
  auto pot = integrate_potential(omega.scaled(potential_scale(eps)), base, F0);
  auto K = assemble_K(L, pot.F, eps, opt.sign);
  PickPotential p{std::move(L),          std::move(omega), std::move(pot.F), base, F0,
                  opt.beta,              pot.path_defect,  pot.exactness_max,
                  std::move(pot.warnings)};
  return {std::move(p), std::move(K)};
}

/// Residuals of the two first-order equations for (K^1_12, K^2_21):
///   first  = (K^2_21)_x - eps (K^1_12)_y - eps phi_y K^1_12 + phi_x K^2_21
///   second = (K^1_12)_x + (K^2_21)_y + phi_x K^1_12 + phi_y K^2_21
struct FirstOrderResidual {
  ScalarField first;
  ScalarField second;

  /// Pointwise sqrt(first^2 + second^2).
  ScalarField magnitude() const {
    return zip(first, second, [](double a, double b) { return std::hypot(a, b); });
  }
};

inline FirstOrderResidual first_order_residual(const DifferenceTensor& K,
                                               const ConformalMetric& g) {
  const double eps = g.epsilon();
  const auto& P = K.K112();
  const auto& Q = K.K221();
  const auto px = partial(g.phi(), Axis::x), py = partial(g.phi(), Axis::y);
  auto first = partial(Q, Axis::x) - eps * partial(P, Axis::y) - eps * py * P + px * Q;
  auto second = partial(P, Axis::x) + partial(Q, Axis::y) + px * P + py * Q;
  return {std::move(first), std::move(second)};
}

/// L_x / (2L) - [l_y / (l^2 + eps) - phi_x] with l = K^1_12 / K^2_21.
/// Requires K^2_21 nowhere zero.
inline ScalarField slope_identity_residual(const DifferenceTensor& K, const ConformalMetric& g) {
  const double eps = g.epsilon();
  const auto L = pick_L(K);
  const auto l = K.K112() / K.K221();
  const auto lhs = partial(L, Axis::x) / (2.0 * L);
  const auto rhs = partial(l, Axis::y) / map(l, [eps](double v) { return v * v + eps; }) -
                   partial(g.phi(), Axis::x);
  return lhs - rhs;
}

}  // namespace blaschke
