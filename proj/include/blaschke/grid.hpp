#pragma once

// Discrete isothermal charts, scalar fields on them and the finite-difference
// calculus everything else is built on.
//
// Discretization: second-order central differences in the interior and
// second-order one-sided stencils on the boundary. Second derivatives use a
// direct 3-point stencil in the interior and the 4-point one-sided stencil
// (2, -5, 4, -1) on the boundary; flat_laplacian is built from those, never
// from composed first derivatives.
//
// Every field carries a boundary band: the number of rows/columns next to
// each edge whose discretization error is not a smooth O(h^2) function.
// Samples of an analytic function have band 0; each derivative adds one.
// Differentiating a field inside its band yields errors that do not converge,
// so norms always exclude max(kInteriorMargin, band) cells.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blaschke/error.hpp"

namespace blaschke {

/// Cells excluded at the boundary from every residual norm, at least.
inline constexpr int kInteriorMargin = 2;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class Axis { x = 1, y = 2 };

/// Rectangular coordinate grid together with the signature flag epsilon of
/// the isothermal metric g = e^phi diag(1, epsilon).
class IsothermalChart {
 public:
  IsothermalChart(Interval x_range, Interval y_range, int nx, int ny,
                  int epsilon = 1)
      : x_(x_range), y_(y_range), nx_(nx), ny_(ny), epsilon_(epsilon) {
    if (nx < 5 || ny < 5)
      throw DomainError("chart needs at least 5 points per axis");
    if (!(x_.length() > 0.0) || !(y_.length() > 0.0))
      throw DomainError("chart ranges must have positive length");
    if (epsilon != 1 && epsilon != -1)
      throw DomainError("epsilon must be +1 or -1");
  }

  const Interval& x_range() const { return x_; }
  const Interval& y_range() const { return y_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int size() const { return nx_ * ny_; }
  int epsilon() const { return epsilon_; }

  double hx() const { return x_.length() / (nx_ - 1); }
  double hy() const { return y_.length() / (ny_ - 1); }
  double spacing(Axis a) const { return a == Axis::x ? hx() : hy(); }
  double h_max() const { return std::max(hx(), hy()); }

  double x(int i) const { return i == nx_ - 1 ? x_.hi : x_.lo + i * hx(); }
  double y(int j) const { return j == ny_ - 1 ? y_.hi : y_.lo + j * hy(); }

  int index(int i, int j) const { return j * nx_ + i; }

  /// Spacing and coordinates evaluated in another scalar type.
  template <class T>
  T spacing_as(Axis a) const {
    const Interval& r = a == Axis::x ? x_ : y_;
    return (T(r.hi) - T(r.lo)) / T((a == Axis::x ? nx_ : ny_) - 1);
  }
  template <class T>
  T x_as(int i) const {
    return i == nx_ - 1 ? T(x_.hi) : T(x_.lo) + T(i) * spacing_as<T>(Axis::x);
  }
  template <class T>
  T y_as(int j) const {
    return j == ny_ - 1 ? T(y_.hi) : T(y_.lo) + T(j) * spacing_as<T>(Axis::y);
  }

  /// Same grid with another signature flag.
  IsothermalChart with_epsilon(int eps) const {
    return IsothermalChart(x_, y_, nx_, ny_, eps);
  }

  /// Same grid shifted by (dx, dy).
  IsothermalChart translated(double dx, double dy) const {
    return IsothermalChart({x_.lo + dx, x_.hi + dx}, {y_.lo + dy, y_.hi + dy},
                           nx_, ny_, epsilon_);
  }

  bool same_grid(const IsothermalChart& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && x_ == o.x_ && y_ == o.y_ &&
           epsilon_ == o.epsilon_;
  }

  friend bool operator==(const IsothermalChart&,
                         const IsothermalChart&) = default;

 private:
  Interval x_, y_;
  int nx_, ny_;
  int epsilon_;
};

/// Immutable grid function. Values are stored row-major: index = j * nx + i
/// with i along x and j along y. T is double everywhere except in the graph
/// oracle, which may run in extended precision.
template <class T>
class BasicField {
 public:
  using value_type = T;

  BasicField(IsothermalChart chart, std::vector<T> values, int band = 0)
      : chart_(std::move(chart)), values_(std::move(values)), band_(band) {
    if (static_cast<int>(values_.size()) != chart_.size())
      throw DomainError("field size does not match its chart");
    using std::isfinite;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!isfinite(values_[k])) {
        const int i = static_cast<int>(k) % chart_.nx();
        const int j = static_cast<int>(k) / chart_.nx();
        throw DegenerateError("non-finite field value", i, j, chart_.x(i),
                              chart_.y(j));
      }
    }
  }

  static BasicField constant(const IsothermalChart& chart, T v) {
    return BasicField(chart, std::vector<T>(chart.size(), v));
  }

  /// Samples fn(x, y) at every grid point; the result has band 0. Coordinates
  /// are computed in T.
  template <class Fn>
  static BasicField sample(const IsothermalChart& chart, Fn&& fn) {
    std::vector<T> v(chart.size());
    for (int j = 0; j < chart.ny(); ++j)
      for (int i = 0; i < chart.nx(); ++i)
        v[chart.index(i, j)] = fn(chart.template x_as<T>(i), chart.template y_as<T>(j));
    return BasicField(chart, std::move(v));
  }

  const IsothermalChart& chart() const { return chart_; }
  int nx() const { return chart_.nx(); }
  int ny() const { return chart_.ny(); }
  int band() const { return band_; }
  std::span<const T> values() const { return values_; }

  T operator()(int i, int j) const { return values_[chart_.index(i, j)]; }
  T operator[](int k) const { return values_[k]; }

  /// Copy with a different band annotation.
  BasicField with_band(int band) const { return BasicField(chart_, values_, band); }

  /// Copy carrying another signature flag (same values).
  BasicField with_chart(const IsothermalChart& chart) const {
    if (chart.nx() != nx() || chart.ny() != ny())
      throw ChartMismatchError("with_chart: grid sizes differ");
    return BasicField(chart, values_, band_);
  }

 private:

  IsothermalChart chart_;
  std::vector<T> values_;
  int band_ = 0;
};

using ScalarField = BasicField<double>;

template <class A, class B>
void require_same_grid(const BasicField<A>& a, const BasicField<B>& b) {
  if (a.nx() != b.nx() || a.ny() != b.ny() ||
      !(a.chart().x_range() == b.chart().x_range()) ||
      !(a.chart().y_range() == b.chart().y_range()))
    throw ChartMismatchError("fields live on different grids");
}

/// Pointwise map; the band is preserved.
template <class T, class Fn>
BasicField<T> map(const BasicField<T>& a, Fn&& fn) {
  std::vector<T> v(a.values().size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = fn(a.values()[k]);
  return BasicField<T>(a.chart(), std::move(v), a.band());
}

/// Pointwise combination of two fields on the same grid.
template <class T, class Fn>
BasicField<T> zip(const BasicField<T>& a, const BasicField<T>& b, Fn&& fn) {
  require_same_grid(a, b);
  std::vector<T> v(a.values().size());
  for (std::size_t k = 0; k < v.size(); ++k)
    v[k] = fn(a.values()[k], b.values()[k]);
  return BasicField<T>(a.chart(), std::move(v), std::max(a.band(), b.band()));
}

template <class T>
BasicField<T> operator+(const BasicField<T>& a, const BasicField<T>& b) {
  return zip(a, b, [](const T& p, const T& q) -> T { return p + q; });
}
template <class T>
BasicField<T> operator-(const BasicField<T>& a, const BasicField<T>& b) {
  return zip(a, b, [](const T& p, const T& q) -> T { return p - q; });
}
template <class T>
BasicField<T> operator*(const BasicField<T>& a, const BasicField<T>& b) {
  return zip(a, b, [](const T& p, const T& q) -> T { return p * q; });
}
template <class T>
BasicField<T> operator/(const BasicField<T>& a, const BasicField<T>& b) {
  return zip(a, b, [](const T& p, const T& q) -> T { return p / q; });
}
template <class T>
BasicField<T> operator*(double s, const BasicField<T>& a) {
  return map(a, [s](const T& p) -> T { return T(s) * p; });
}
template <class T>
BasicField<T> operator*(const BasicField<T>& a, double s) {
  return s * a;
}
template <class T>
BasicField<T> operator+(const BasicField<T>& a, double s) {
  return map(a, [s](const T& p) -> T { return p + T(s); });
}
template <class T>
BasicField<T> operator-(const BasicField<T>& a, double s) {
  return a + (-s);
}
template <class T>
BasicField<T> operator-(const BasicField<T>& a) {
  return -1.0 * a;
}

inline ScalarField exp(const ScalarField& a) {
  return map(a, [](double p) { return std::exp(p); });
}

template <class T>
ScalarField to_double(const BasicField<T>& a) {
  std::vector<double> v(a.values().size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<double>(a.values()[k]);
  return ScalarField(a.chart(), std::move(v), a.band());
}

// ---------------------------------------------------------------------------
// Finite differences

namespace detail {

// Applies a 1-D stencil along one axis. `line` receives a strided view of the
// input line and writes the output line.
template <class T, class LineOp>
BasicField<T> along(const BasicField<T>& f, Axis axis, int band_increase,
                    LineOp&& line) {
  const auto& c = f.chart();
  const int nx = c.nx(), ny = c.ny();
  std::vector<T> out(c.size());
  const auto in = f.values();
  if (axis == Axis::x) {
    for (int j = 0; j < ny; ++j)
      line(nx, [&](int i) -> const T& { return in[c.index(i, j)]; },
           [&](int i) -> T& { return out[c.index(i, j)]; });
  } else {
    for (int i = 0; i < nx; ++i)
      line(ny, [&](int j) -> const T& { return in[c.index(i, j)]; },
           [&](int j) -> T& { return out[c.index(i, j)]; });
  }
  return BasicField<T>(c, std::move(out), f.band() + band_increase);
}

}  // namespace detail

/// First derivative along `axis`: central differences in the interior,
/// one-sided 3-point stencils on the two boundary lines. Exact on quadratics.
template <class T>
BasicField<T> partial(const BasicField<T>& f, Axis axis) {
  const T h2 = 2 * f.chart().template spacing_as<T>(axis);
  return detail::along(f, axis, 1, [&h2](int n, auto in, auto out) {
    out(0) = (-3 * in(0) + 4 * in(1) - in(2)) / h2;
    for (int k = 1; k < n - 1; ++k) out(k) = (in(k + 1) - in(k - 1)) / h2;
    out(n - 1) = (3 * in(n - 1) - 4 * in(n - 2) + in(n - 3)) / h2;
  });
}

/// Second derivative along `axis`: 3-point stencil in the interior, 4-point
/// second-order one-sided stencil on the boundary. Exact on cubics.
template <class T>
BasicField<T> second_partial(const BasicField<T>& f, Axis axis) {
  const T h = f.chart().template spacing_as<T>(axis);
  const T h2 = h * h;
  return detail::along(f, axis, 1, [&h2](int n, auto in, auto out) {
    out(0) = (2 * in(0) - 5 * in(1) + 4 * in(2) - in(3)) / h2;
    for (int k = 1; k < n - 1; ++k) out(k) = (in(k + 1) - 2 * in(k) + in(k - 1)) / h2;
    out(n - 1) = (2 * in(n - 1) - 5 * in(n - 2) + 4 * in(n - 3) - in(n - 4)) / h2;
  });
}

/// Mixed derivative d^2 f / dx dy as the composition of two first
/// derivatives (the composed operators commute exactly).
template <class T>
BasicField<T> mixed_partial(const BasicField<T>& f) {
  return partial(partial(f, Axis::x), Axis::y);
}

/// Delta_0 f = f_11 + epsilon f_22 (direct second-derivative stencils).
inline ScalarField flat_laplacian(const ScalarField& f) {
  const double eps = f.chart().epsilon();
  return zip(second_partial(f, Axis::x), second_partial(f, Axis::y),
             [eps](double a, double b) { return a + eps * b; });
}

/// Conformal metric g = e^phi (dx^2 + epsilon dy^2) on an isothermal chart.
class ConformalMetric {
 public:
  explicit ConformalMetric(ScalarField phi) : phi_(std::move(phi)) {
    for (double p : phi_.values())
      if (!std::isfinite(std::exp(p)) || std::exp(p) <= 0.0)
        throw DomainError("conformal factor e^phi is not finite and positive");
  }

  const IsothermalChart& chart() const { return phi_.chart(); }
  int epsilon() const { return phi_.chart().epsilon(); }
  const ScalarField& phi() const { return phi_; }

  /// g_11 = e^phi; equals the volume density sqrt|det g|.
  ScalarField conformal_factor() const { return exp(phi_); }
  ScalarField volume_density() const { return conformal_factor(); }

  /// |det [e^phi, 0; 0, epsilon e^phi]| evaluated literally.
  ScalarField determinant() const {
    const double eps = epsilon();
    return map(phi_, [eps](double p) {
      const double e = std::exp(p);
      return std::abs(e * eps * e);
    });
  }

 private:
  ScalarField phi_;
};

inline void require_same_grid(const ScalarField& a, const ConformalMetric& g) {
  require_same_grid(a, g.phi());
}

/// Delta f = (f_11 + epsilon f_22) / e^phi.
inline ScalarField laplace_beltrami(const ScalarField& f,
                                    const ConformalMetric& g) {
  require_same_grid(f, g);
  return zip(flat_laplacian(f), g.phi(),
             [](double lap, double p) { return lap / std::exp(p); });
}

/// kappa = -Delta(phi) / 2.
inline ScalarField gaussian_curvature(const ConformalMetric& g) {
  return -0.5 * laplace_beltrami(g.phi(), g);
}

/// Gaussian curvature of a general (possibly indefinite) 2-D metric
/// E dx^2 + 2F dx dy + G dy^2 via the Brioschi formula.
template <class T>
BasicField<T> brioschi_curvature(const BasicField<T>& E, const BasicField<T>& F,
                                 const BasicField<T>& G) {
  require_same_grid(E, F);
  require_same_grid(E, G);
  const auto& c = E.chart();
  using std::abs;
  for (int j = 0; j < c.ny(); ++j)
    for (int i = 0; i < c.nx(); ++i) {
      const T det = E(i, j) * G(i, j) - F(i, j) * F(i, j);
      if (abs(det) < T(1e-12))
        throw DegenerateError("degenerate metric (EG - F^2 = 0)", i, j, c.x(i),
                              c.y(j));
    }
  const auto Eu = partial(E, Axis::x), Ev = partial(E, Axis::y);
  const auto Fu = partial(F, Axis::x), Fv = partial(F, Axis::y);
  const auto Gu = partial(G, Axis::x), Gv = partial(G, Axis::y);
  const auto Evv = second_partial(E, Axis::y);
  const auto Guu = second_partial(G, Axis::x);
  const auto Fuv = mixed_partial(F);

  std::vector<T> out(c.size());
  int band = 0;
  for (const auto* f : {&Eu, &Ev, &Fu, &Fv, &Gu, &Gv, &Evv, &Guu, &Fuv})
    band = std::max(band, f->band());
  const T half(0.5);
  for (int k = 0; k < c.size(); ++k) {
    const T e = E[k], f = F[k], g = G[k];
    const T a11 = -half * Evv[k] + Fuv[k] - half * Guu[k];
    const T a12 = half * Eu[k], a13 = Fu[k] - half * Ev[k];
    const T a21 = Fv[k] - half * Gu[k], a31 = half * Gv[k];
    // det [[a11, a12, a13], [a21, e, f], [a31, f, g]]
    const T d1 = a11 * (e * g - f * f) - a12 * (a21 * g - f * a31) +
                 a13 * (a21 * f - e * a31);
    const T b = half * Ev[k], cc = half * Gu[k];
    // det [[0, b, cc], [b, e, f], [cc, f, g]]
    const T d2 = -b * (b * g - f * cc) + cc * (b * f - e * cc);
    const T det = e * g - f * f;
    out[k] = (d1 - d2) / (det * det);
  }
  return BasicField<T>(c, std::move(out), band);
}

// ---------------------------------------------------------------------------
// Norms over the interior

/// Margin actually excluded for `f`: at least `min_margin`, never less than
/// the field's band.
inline int effective_margin(const ScalarField& f,
                            int min_margin = kInteriorMargin) {
  return std::max(min_margin, f.band());
}

inline void require_interior(const ScalarField& f, int margin) {
  if (f.nx() - 2 * margin < 1 || f.ny() - 2 * margin < 1)
    throw DomainError("grid too small for boundary margin " +
                      std::to_string(margin));
}

inline double interior_max_abs(const ScalarField& f,
                               int min_margin = kInteriorMargin) {
  const int m = effective_margin(f, min_margin);
  require_interior(f, m);
  double best = 0.0;
  for (int j = m; j < f.ny() - m; ++j)
    for (int i = m; i < f.nx() - m; ++i) best = std::max(best, std::abs(f(i, j)));
  return best;
}

/// Grid L2 norm sqrt(sum f^2 hx hy) over the interior.
inline double interior_l2(const ScalarField& f, int min_margin = kInteriorMargin) {
  const int m = effective_margin(f, min_margin);
  require_interior(f, m);
  double sum = 0.0;
  for (int j = m; j < f.ny() - m; ++j)
    for (int i = m; i < f.nx() - m; ++i) sum += f(i, j) * f(i, j);
  return std::sqrt(sum * f.chart().hx() * f.chart().hy());
}

inline double max_abs(const ScalarField& f) {
  double best = 0.0;
  for (double v : f.values()) best = std::max(best, std::abs(v));
  return best;
}

inline double max_abs_difference(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b);
  double best = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k)
    best = std::max(best, std::abs(a.values()[k] - b.values()[k]));
  return best;
}

// ---------------------------------------------------------------------------
// Grid field file format

inline nlohmann::json to_json(const ScalarField& f) {
  const auto& c = f.chart();
  return {{"nx", c.nx()},
          {"ny", c.ny()},
          {"x_range", {c.x_range().lo, c.x_range().hi}},
          {"y_range", {c.y_range().lo, c.y_range().hi}},
          {"epsilon", c.epsilon()},
          {"band", f.band()},
          {"values", std::vector<double>(f.values().begin(), f.values().end())}};
}

inline ScalarField field_from_json(const nlohmann::json& j) {
  try {
    const IsothermalChart chart(
        {j.at("x_range").at(0).get<double>(), j.at("x_range").at(1).get<double>()},
        {j.at("y_range").at(0).get<double>(), j.at("y_range").at(1).get<double>()},
        j.at("nx").get<int>(), j.at("ny").get<int>(), j.at("epsilon").get<int>());
    return ScalarField(chart, j.at("values").get<std::vector<double>>(), j.value("band", 0));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed grid field document: ") + e.what());
  }
}

}  // namespace blaschke
