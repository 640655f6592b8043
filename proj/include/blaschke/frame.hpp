#pragma once

// Reconstruction of the immersion from (g, nabla, lambda).
//
// With the frame Phi = (e1 | e2 | xi) (columns in R^3) the Gauss and
// Weingarten formulas read d_i Phi = Phi A_i, where column j of A_i is
// (G^1_ij, G^2_ij, g_ij) for j = 1, 2 and column 3 is -lambda (d_i1, d_i2, 0).
// The position f is carried along in the augmented 4x4 system
//
//     M = [Phi f; 0 1],   d_i M = M [A_i e_i; 0 0].
//
// Integration is classical RK4 along the basepoint row, then along every
// column; A at half steps comes from 4-point cubic interpolation.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "blaschke/connection.hpp"
#include "blaschke/error.hpp"
#include "blaschke/grid.hpp"
#include "blaschke/parallel.hpp"

namespace blaschke {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Grid of small matrices on a chart.
template <class T>
struct GridOf {
  IsothermalChart chart;
  std::vector<T, Eigen::aligned_allocator<T>> values;
  int band = 0;

  const T& operator()(int i, int j) const { return values[chart.index(i, j)]; }
  T& operator()(int i, int j) { return values[chart.index(i, j)]; }
};

using MatrixGrid = GridOf<Mat3>;

struct StructureMatrices {
  MatrixGrid A1;
  MatrixGrid A2;
};

/// A_i for i = 1, 2 at every grid point.
inline StructureMatrices structure_matrices(const ChristoffelField& gamma,
                                            const ConformalMetric& g, double lambda) {
  const auto& c = g.chart();
  const double eps = g.epsilon();
  int band = g.phi().band();
  for (int k = 1; k <= 2; ++k)
    for (int i = 1; i <= 2; ++i)
      for (int j = i; j <= 2; ++j) band = std::max(band, gamma(k, i, j).band());
  StructureMatrices out{{c, {}, band}, {c, {}, band}};
  out.A1.values.resize(c.size());
  out.A2.values.resize(c.size());
  for (int n = 0; n < c.size(); ++n) {
    const double e = std::exp(g.phi()[n]);
    const double metric[3][3] = {{0, 0, 0}, {0, e, 0}, {0, 0, eps * e}};
    for (int i = 1; i <= 2; ++i) {
      Mat3 A = Mat3::Zero();
      for (int j = 1; j <= 2; ++j) {
        A(0, j - 1) = gamma(1, i, j)[n];
        A(1, j - 1) = gamma(2, i, j)[n];
        A(2, j - 1) = metric[i][j];
      }
      A(0, 2) = i == 1 ? -lambda : 0.0;
      A(1, 2) = i == 2 ? -lambda : 0.0;
      (i == 1 ? out.A1 : out.A2).values[n] = A;
    }
  }
  return out;
}

namespace detail {

// Second-order first derivative of a matrix grid (same stencils as partial).
inline MatrixGrid partial(const MatrixGrid& A, Axis axis) {
  const auto& c = A.chart;
  const double h = c.spacing(axis);
  MatrixGrid out{c, {}, A.band + 1};
  out.values.resize(c.size());
  const int n = axis == Axis::x ? c.nx() : c.ny();
  const int lines = axis == Axis::x ? c.ny() : c.nx();
  for (int line = 0; line < lines; ++line) {
    auto in = [&](int k) -> const Mat3& {
      return axis == Axis::x ? A(k, line) : A(line, k);
    };
    auto put = [&](int k) -> Mat3& { return axis == Axis::x ? out(k, line) : out(line, k); };
    put(0) = (-3.0 * in(0) + 4.0 * in(1) - in(2)) / (2.0 * h);
    for (int k = 1; k < n - 1; ++k) put(k) = (in(k + 1) - in(k - 1)) / (2.0 * h);
    put(n - 1) = (3.0 * in(n - 1) - 4.0 * in(n - 2) + in(n - 3)) / (2.0 * h);
  }
  return out;
}

}  // namespace detail

/// Pointwise Frobenius norm of d_y A1 - d_x A2 + A2 A1 - A1 A2, the
/// integrability condition of d_i Phi = Phi A_i.
inline ScalarField compatibility_residual(const StructureMatrices& s) {
  const auto dA1 = detail::partial(s.A1, Axis::y);
  const auto dA2 = detail::partial(s.A2, Axis::x);
  const auto& c = s.A1.chart;
  std::vector<double> out(c.size());
  for (int n = 0; n < c.size(); ++n) {
    const Mat3& a1 = s.A1.values[n];
    const Mat3& a2 = s.A2.values[n];
    out[n] = (dA1.values[n] - dA2.values[n] + a2 * a1 - a1 * a2).norm();
  }
  return ScalarField(c, std::move(out), std::max(dA1.band, dA2.band));
}

/// Integrated affine immersion: position, tangent frame and transversal.
struct FrameField {
  int nx = 0;
  int ny = 0;
  std::optional<IsothermalChart> chart;
  std::vector<Vec3> position, e1, e2, xi;
  double lambda = 0.0;
  int band = 0;
  /// max over the grid of |Phi_row_first - Phi_column_first| (frame and position).
  double frame_path_defect = 0.0;

  int index(int i, int j) const { return j * nx + i; }

  double volume(int n) const {
    Mat3 m;
    m << e1[n], e2[n], xi[n];
    return m.determinant();
  }
};

struct InitialFrame {
  Vec3 e1, e2, xi;
  Vec3 position = Vec3::Zero();
};

/// e1 = (s, 0, 0), e2 = (0, s, 0), xi = (0, 0, 1) with s = e^{phi(p)/2}, so
/// det(e1, e2, xi) = e^{phi(p)}. Used for both signatures.
inline InitialFrame default_initial_frame(const ConformalMetric& g, GridIndex p) {
  const double s = std::exp(0.5 * g.phi()(p.i, p.j));
  return {Vec3(s, 0, 0), Vec3(0, s, 0), Vec3(0, 0, 1)};
}

namespace detail {

inline Mat4 augmented(const Mat3& A, int axis) {
  Mat4 out = Mat4::Zero();
  out.topLeftCorner<3, 3>() = A;
  out(axis == 1 ? 0 : 1, 3) = 1.0;
  return out;
}

// A at the midpoint between nodes a and a + dir of a line of length n
// (4-point cubic interpolation, one-sided near the ends).
template <class At>
Mat3 midpoint(At&& at, int a, int dir, int n) {
  const int lo = dir > 0 ? a : a - 1;
  if (lo == 0) return (5.0 * at(0) + 15.0 * at(1) - 5.0 * at(2) + at(3)) / 16.0;
  if (lo == n - 2)
    return (at(n - 4) - 5.0 * at(n - 3) + 15.0 * at(n - 2) + 5.0 * at(n - 1)) / 16.0;
  return (-at(lo - 1) + 9.0 * at(lo) + 9.0 * at(lo + 1) - at(lo + 2)) / 16.0;
}

// One RK4 step of dM/dt = M B(t) from node a to a + dir.
template <class At>
Mat4 rk4_step(const Mat4& M, At&& at, int a, int dir, int n, double h, int axis) {
  const double dt = dir * h;
  const Mat4 B0 = augmented(at(a), axis);
  const Mat4 Bm = augmented(midpoint(at, a, dir, n), axis);
  const Mat4 B1 = augmented(at(a + dir), axis);
  const Mat4 k1 = M * B0;
  const Mat4 k2 = (M + 0.5 * dt * k1) * Bm;
  const Mat4 k3 = (M + 0.5 * dt * k2) * Bm;
  const Mat4 k4 = (M + dt * k3) * B1;
  return M + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline std::vector<Mat4, Eigen::aligned_allocator<Mat4>> integrate_staircase(
    const StructureMatrices& s, const Mat4& M0, GridIndex base, bool row_first) {
  const auto& c = s.A1.chart;
  const int nx = c.nx(), ny = c.ny();
  std::vector<Mat4, Eigen::aligned_allocator<Mat4>> M(c.size());
  auto walk = [&](bool along_x, int fixed, int start) {
    const int n = along_x ? nx : ny;
    const double h = along_x ? c.hx() : c.hy();
    auto at = [&](int k) -> const Mat3& {
      return along_x ? s.A1(k, fixed) : s.A2(fixed, k);
    };
    auto idx = [&](int k) { return along_x ? c.index(k, fixed) : c.index(fixed, k); };
    for (int k = start; k + 1 < n; ++k)
      M[idx(k + 1)] = rk4_step(M[idx(k)], at, k, +1, n, h, along_x ? 1 : 2);
    for (int k = start; k - 1 >= 0; --k)
      M[idx(k - 1)] = rk4_step(M[idx(k)], at, k, -1, n, h, along_x ? 1 : 2);
  };
  M[c.index(base.i, base.j)] = M0;
  if (row_first) {
    walk(true, base.j, base.i);
    parallel_for(nx, [&](int i) { walk(false, i, base.j); });
  } else {
    walk(false, base.i, base.j);
    parallel_for(ny, [&](int j) { walk(true, j, base.i); });
  }
  return M;
}

}  // namespace detail

/// Integrates d_i M = M [A_i e_i; 0 0] from the initial frame at `base`.
/// Throws FrameDegeneracyError if det(e1, e2, xi) < 1e-8 e^phi anywhere
/// (the volume check needs the metric, so it is skipped when `g` is null).
inline FrameField integrate_frame(const StructureMatrices& s, const InitialFrame& init,
                                  GridIndex base, double lambda,
                                  const ConformalMetric* g = nullptr) {
  const auto& c = s.A1.chart;
  Mat4 M0 = Mat4::Identity();
  M0.block<3, 1>(0, 0) = init.e1;
  M0.block<3, 1>(0, 1) = init.e2;
  M0.block<3, 1>(0, 2) = init.xi;
  M0.block<3, 1>(0, 3) = init.position;
  if (!(M0.topLeftCorner<3, 3>().determinant() > 0.0))
    throw FrameDegeneracyError("initial frame is not positively oriented");

  const auto M = detail::integrate_staircase(s, M0, base, true);
  const auto MT = detail::integrate_staircase(s, M0, base, false);

  FrameField f;
  f.nx = c.nx();
  f.ny = c.ny();
  f.chart = c;
  f.lambda = lambda;
  f.band = s.A1.band;
  const int n = c.size();
  f.position.resize(n);
  f.e1.resize(n);
  f.e2.resize(n);
  f.xi.resize(n);
  for (int k = 0; k < n; ++k) {
    f.e1[k] = M[k].block<3, 1>(0, 0);
    f.e2[k] = M[k].block<3, 1>(0, 1);
    f.xi[k] = M[k].block<3, 1>(0, 2);
    f.position[k] = M[k].block<3, 1>(0, 3);
    f.frame_path_defect =
        std::max(f.frame_path_defect, (M[k] - MT[k]).cwiseAbs().maxCoeff());
    if (g) {
      const double vol = f.volume(k);
      const double e = std::exp(g->phi()[k]);
      if (!(vol >= 1e-8 * e)) {
        const int i = k % c.nx(), j = k / c.nx();
        throw FrameDegeneracyError("frame degenerates at (" + std::to_string(c.x(i)) + ", " +
                                   std::to_string(c.y(j)) + ")");
      }
    }
  }
  return f;
}

struct ImmersionReport {
  double gauss = 0.0;               // max |d_i e_j - G^1_ij e1 - G^2_ij e2 - g_ij xi|
  double weingarten = 0.0;          // max |d_i xi + lambda e_i|
  double volume = 0.0;              // max |det(e1, e2, xi) - e^phi|
  double metric_recovery = 0.0;     // max |g'_ij - g_ij|
  double metric_recovery_rel = 0.0; // max |g'_ij - g_ij| / e^phi
  double frame_path_defect = 0.0;
  int interior_margin = kInteriorMargin;
};

inline nlohmann::json to_json(const ImmersionReport& r) {
  return {{"gauss", r.gauss},
          {"weingarten", r.weingarten},
          {"volume", r.volume},
          {"metric_recovery", r.metric_recovery},
          {"metric_recovery_relative", r.metric_recovery_rel},
          {"frame_path_defect", r.frame_path_defect},
          {"interior_margin", r.interior_margin}};
}

namespace detail {

// Fourth-order first derivative of a vector grid along one axis (5-point
// central stencil, 5-point one-sided stencils on the two outer lines).
inline std::vector<Vec3> derivative4(const std::vector<Vec3>& v, int nx, int ny, Axis axis,
                                     double h) {
  std::vector<Vec3> out(v.size());
  const int n = axis == Axis::x ? nx : ny;
  const int lines = axis == Axis::x ? ny : nx;
  if (n < 5) throw DomainError("fourth-order differences need 5 points");
  for (int line = 0; line < lines; ++line) {
    auto idx = [&](int k) { return axis == Axis::x ? line * nx + k : k * nx + line; };
    auto f = [&](int k) -> const Vec3& { return v[idx(k)]; };
    const double d = 12.0 * h;
    out[idx(0)] = (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4)) / d;
    out[idx(1)] = (-3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4)) / d;
    for (int k = 2; k < n - 2; ++k)
      out[idx(k)] = (f(k - 2) - 8.0 * f(k - 1) + 8.0 * f(k + 1) - f(k + 2)) / d;
    out[idx(n - 2)] =
        (3.0 * f(n - 1) + 10.0 * f(n - 2) - 18.0 * f(n - 3) + 6.0 * f(n - 4) - f(n - 5)) / d;
    out[idx(n - 1)] = (25.0 * f(n - 1) - 48.0 * f(n - 2) + 36.0 * f(n - 3) -
                       16.0 * f(n - 4) + 3.0 * f(n - 5)) /
                      d;
  }
  return out;
}

}  // namespace detail

/// Reads the frame back through the structure equations. Frame derivatives use
/// fourth-order differences (the integrator is fourth order), so on exact
/// constant-coefficient data the residuals sit far below the O(h^2) level of
/// the upstream fields.
inline ImmersionReport verify_immersion(const FrameField& frame, const ConformalMetric& g,
                                        const ChristoffelField& gamma) {
  const auto& c = g.chart();
  if (frame.nx != c.nx() || frame.ny != c.ny())
    throw ChartMismatchError("frame and metric grids differ");
  const double eps = g.epsilon();
  const double lambda = frame.lambda;
  const int nx = c.nx(), ny = c.ny();

  const std::vector<Vec3>* e[3] = {nullptr, &frame.e1, &frame.e2};
  std::vector<Vec3> de[3][3];  // de[i][j] = d_i e_j
  std::vector<Vec3> dxi[3];
  for (int i = 1; i <= 2; ++i) {
    const Axis ax = i == 1 ? Axis::x : Axis::y;
    for (int j = 1; j <= 2; ++j) de[i][j] = detail::derivative4(*e[j], nx, ny, ax, c.spacing(ax));
    dxi[i] = detail::derivative4(frame.xi, nx, ny, ax, c.spacing(ax));
  }

  // The 5-point stencils reach two cells, so they widen the band by two.
  int band = frame.band + 2;
  for (int k = 1; k <= 2; ++k)
    for (int i = 1; i <= 2; ++i)
      for (int j = i; j <= 2; ++j) band = std::max(band, gamma(k, i, j).band());
  ImmersionReport r;
  r.interior_margin = std::max(kInteriorMargin, band);
  r.frame_path_defect = frame.frame_path_defect;
  const int m = r.interior_margin;
  if (nx - 2 * m < 1 || ny - 2 * m < 1) throw DomainError("grid too small for verification");

  for (int jj = m; jj < ny - m; ++jj)
    for (int ii = m; ii < nx - m; ++ii) {
      const int n = c.index(ii, jj);
      const double ephi = std::exp(g.phi()[n]);
      const double metric[3][3] = {{0, 0, 0}, {0, ephi, 0}, {0, 0, eps * ephi}};
      Mat3 Phi;
      Phi << frame.e1[n], frame.e2[n], frame.xi[n];
      const Eigen::PartialPivLU<Mat3> lu(Phi);
      for (int i = 1; i <= 2; ++i) {
        for (int j = 1; j <= 2; ++j) {
          const Vec3 predicted = gamma(1, i, j)[n] * frame.e1[n] +
                                 gamma(2, i, j)[n] * frame.e2[n] + metric[i][j] * frame.xi[n];
          r.gauss = std::max(r.gauss, (de[i][j][n] - predicted).norm());
          const Vec3 coeff = lu.solve(de[i][j][n]);
          const double err = std::abs(coeff(2) - metric[i][j]);
          r.metric_recovery = std::max(r.metric_recovery, err);
          r.metric_recovery_rel = std::max(r.metric_recovery_rel, err / ephi);
        }
        const Vec3& ei = i == 1 ? frame.e1[n] : frame.e2[n];
        r.weingarten = std::max(r.weingarten, (dxi[i][n] + lambda * ei).norm());
      }
      r.volume = std::max(r.volume, std::abs(frame.volume(n) - ephi));
    }
  return r;
}

/// Max deviation of xi from its value at the first grid point.
inline double transversal_spread(const FrameField& f) {
  double worst = 0.0;
  for (const auto& v : f.xi) worst = std::max(worst, (v - f.xi[0]).cwiseAbs().maxCoeff());
  return worst;
}

// ---------------------------------------------------------------------------
// Meshes

struct MeshPatch {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;  // 0-based
};

/// Vertex grid of the frame (optionally subsampled to mesh_nx x mesh_ny
/// vertices) with two triangles per cell.
inline MeshPatch make_mesh(const FrameField& f, int mesh_nx = 0, int mesh_ny = 0) {
  if (mesh_nx <= 0) mesh_nx = f.nx;
  if (mesh_ny <= 0) mesh_ny = f.ny;
  if (mesh_nx < 2 || mesh_ny < 2 || mesh_nx > f.nx || mesh_ny > f.ny)
    throw DomainError("mesh size must lie between 2 and the frame grid size");
  auto pick = [](int k, int m, int n) {
    return m == n ? k : static_cast<int>(std::lround(double(k) * (n - 1) / (m - 1)));
  };
  MeshPatch mesh;
  mesh.vertices.reserve(mesh_nx * mesh_ny);
  for (int j = 0; j < mesh_ny; ++j)
    for (int i = 0; i < mesh_nx; ++i)
      mesh.vertices.push_back(f.position[f.index(pick(i, mesh_nx, f.nx), pick(j, mesh_ny, f.ny))]);
  for (int j = 0; j + 1 < mesh_ny; ++j)
    for (int i = 0; i + 1 < mesh_nx; ++i) {
      const int v00 = j * mesh_nx + i, v10 = v00 + 1, v01 = v00 + mesh_nx, v11 = v01 + 1;
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  return mesh;
}

enum class MeshFormat { obj, ply };

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string mesh_text(const MeshPatch& mesh, MeshFormat format) {
  std::string out;
  if (format == MeshFormat::ply) {
    out += "ply\nformat ascii 1.0\n";
    out += "element vertex " + std::to_string(mesh.vertices.size()) + "\n";
    out += "property double x\nproperty double y\nproperty double z\n";
    out += "element face " + std::to_string(mesh.triangles.size()) + "\n";
    out += "property list uchar int vertex_indices\nend_header\n";
    for (const auto& v : mesh.vertices)
      out += format_number(v.x()) + " " + format_number(v.y()) + " " + format_number(v.z()) + "\n";
    for (const auto& t : mesh.triangles)
      out += "3 " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " +
             std::to_string(t[2]) + "\n";
    return out;
  }
  for (const auto& v : mesh.vertices)
    out += "v " + format_number(v.x()) + " " + format_number(v.y()) + " " +
           format_number(v.z()) + "\n";
  for (const auto& t : mesh.triangles)
    out += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " +
           std::to_string(t[2] + 1) + "\n";
  return out;
}

inline void export_mesh(const MeshPatch& mesh, MeshFormat format, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open mesh file for writing: " + path);
  os << mesh_text(mesh, format);
  if (!os) throw IoError("failed writing mesh file: " + path);
}

/// Reads the vertices and triangles of an OBJ file written by export_mesh.
inline MeshPatch read_obj(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open mesh file: " + path);
  MeshPatch mesh;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      ls >> v.x() >> v.y() >> v.z();
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> t;
      ls >> t[0] >> t[1] >> t[2];
      for (int& k : t) --k;
      mesh.triangles.push_back(t);
    }
    if (!ls && !ls.eof()) throw IoError("malformed OBJ line in " + path + ": " + line);
  }
  return mesh;
}

}  // namespace blaschke
