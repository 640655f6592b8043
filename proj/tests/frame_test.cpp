#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "blaschke/pipeline.hpp"
#include "support.hpp"

using namespace blaschke;
using namespace testing_support;

namespace {

StructureMatrices constant_matrices(const IsothermalChart& c, const Mat3& A1, const Mat3& A2) {
  StructureMatrices s{{c, {}, 0}, {c, {}, 0}};
  s.A1.values.assign(c.size(), A1);
  s.A2.values.assign(c.size(), A2);
  return s;
}

Mat4 augmented(const Mat3& A, int axis) {
  Mat4 B = Mat4::Zero();
  B.topLeftCorner<3, 3>() = A;
  B(axis == 1 ? 0 : 1, 3) = 1.0;
  return B;
}

Reconstruction flat_reconstruction(int n, int sign = 1) {
  auto opt = with_lambda(-1.0);
  opt.sign = sign;
  return reconstruct(construct_sphere(flat(n), opt));
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(StructureMatrices, ImproperFlatColumns) {
  const auto g = flat(9);
  const auto s = structure_matrices(levi_civita(g), g, 0.0);
  for (const auto& A : s.A1.values) {
    EXPECT_EQ(A.col(2), Vec3::Zero());
    EXPECT_EQ(A.col(0), Vec3(0, 0, 1));
    EXPECT_EQ(A.col(1), Vec3::Zero());
  }
  for (const auto& A : s.A2.values) EXPECT_EQ(A.col(1), Vec3(0, 0, 1));
}

TEST(StructureMatrices, LambdaColumn) {
  const auto g = flat(9);
  const auto s = structure_matrices(levi_civita(g), g, -1.0);
  EXPECT_EQ(s.A1.values[0].col(2), Vec3(1, 0, 0));
  EXPECT_EQ(s.A2.values[0].col(2), Vec3(0, 1, 0));
  EXPECT_EQ(s.A1.values[0](2, 2), 0.0);
}

TEST(Compatibility, CommutingConstantsVanish) {
  const auto c = square(0, 1, 9);
  Mat3 A = Mat3::Zero();
  A(0, 0) = 0.3;
  A(1, 1) = -0.2;
  EXPECT_LE(max_abs(compatibility_residual(constant_matrices(c, A, 2.0 * A))), 1e-14);
  Mat3 B = Mat3::Zero();
  B(0, 1) = 1.0;
  EXPECT_GT(max_abs(compatibility_residual(constant_matrices(c, A, B))), 0.4);
}

TEST(Compatibility, FlatConstructionExact) {
  const auto rec = flat_reconstruction(33);
  EXPECT_LE(rec.compatibility, 1e-14);
}

// constant A1 with vanishing second column and A2 = 0: M = M0 exp(x B1) exp(y B2)
TEST(Integrate, MatrixExponentialOracle) {
  const auto c = square(0, 1, 161);
  Mat3 A1;
  A1 << 0.3, 0.0, -0.7, 0.5, 0.0, 0.2, 1.0, 0.0, 0.1;
  const auto s = constant_matrices(c, A1, Mat3::Zero());
  InitialFrame init{Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  const auto f = integrate_frame(s, init, {0, 0}, 0.0);
  const Mat4 B1 = augmented(A1, 1), B2 = augmented(Mat3::Zero(), 2);
  double worst = 0.0;
  for (int j = 0; j < c.ny(); ++j)
    for (int i = 0; i < c.nx(); ++i) {
      const Mat4 M = (c.x(i) * B1).exp() * (c.y(j) * B2).exp();
      const int n = f.index(i, j);
      worst = std::max({worst, (f.e1[n] - M.block<3, 1>(0, 0)).norm(),
                        (f.e2[n] - M.block<3, 1>(0, 1)).norm(),
                        (f.xi[n] - M.block<3, 1>(0, 2)).norm(),
                        (f.position[n] - M.block<3, 1>(0, 3)).norm()});
    }
  EXPECT_LE(worst, 1e-10);
  EXPECT_LE(f.frame_path_defect, 1e-10);
}

TEST(Integrate, ZeroMatricesGiveAPlane) {
  const auto c = square(-1, 1, 9);
  const auto s = constant_matrices(c, Mat3::Zero(), Mat3::Zero());
  InitialFrame init{Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  const auto f = integrate_frame(s, init, center_index(c), 0.0);
  for (int j = 0; j < c.ny(); ++j)
    for (int i = 0; i < c.nx(); ++i) {
      const auto& p = f.position[f.index(i, j)];
      EXPECT_NEAR(p.x(), c.x(i), 1e-14);
      EXPECT_NEAR(p.y(), c.y(j), 1e-14);
      EXPECT_EQ(p.z(), 0.0);
    }
  EXPECT_EQ(transversal_spread(f), 0.0);
}

TEST(Integrate, NegativeInitialFrameRejected) {
  const auto c = square(0, 1, 9);
  const auto s = constant_matrices(c, Mat3::Zero(), Mat3::Zero());
  InitialFrame bad{Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(0, 0, 1)};
  EXPECT_THROW(integrate_frame(s, bad, {0, 0}, 0.0), FrameDegeneracyError);
}

// e1 decays like e^{-30x}: the volume drops below 1e-8 e^phi before x = 1
TEST(Integrate, CollapsingFrameRejected) {
  const auto g = ConformalMetric(ScalarField::constant(square(0, 1, 41), 0.0));
  Mat3 A1 = Mat3::Zero();
  A1(0, 0) = -30.0;
  const auto s = constant_matrices(g.chart(), A1, Mat3::Zero());
  InitialFrame init{Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  EXPECT_NO_THROW(integrate_frame(s, init, {0, 0}, 0.0));
  EXPECT_THROW(integrate_frame(s, init, {0, 0}, 0.0, &g), FrameDegeneracyError);
}

TEST(Reconstruct, FlatVolumeIsOne) {
  const auto rec = flat_reconstruction(64);
  for (std::size_t n = 0; n < rec.frame.xi.size(); ++n)
    EXPECT_NEAR(rec.frame.volume(static_cast<int>(n)), 1.0, 1e-8);
}

TEST(Reconstruct, FlatVerifiesAt128) {
  const auto rec = flat_reconstruction(128);
  EXPECT_LE(rec.report.gauss, 1e-6);
  EXPECT_LE(rec.report.weingarten, 1e-6);
  EXPECT_LE(rec.report.volume, 1e-6);
  EXPECT_LE(rec.report.metric_recovery, 1e-6);
  const auto j = to_json(rec.report);
  EXPECT_TRUE(j.contains("metric_recovery_relative"));
}

TEST(Reconstruct, FactoryMetricRecoveryConverges) {
  std::vector<double> h, v;
  for (int n : {64, 128, 256}) {
    const auto g = factory_metric("constant", n);
    const auto rec = reconstruct(construct_sphere(g, with_lambda(0.0)));
    h.push_back(0.4 / (n - 1));
    v.push_back(rec.report.metric_recovery_rel);
    EXPECT_LE(transversal_spread(rec.frame), 1e-10);
  }
  const auto fit = fit_order(h, v);
  ASSERT_TRUE(fit.order);
  EXPECT_GE(*fit.order, 1.8);
  EXPECT_LE(v[1], 1e-3);
}

TEST(Verify, ScaledTransversalShowsInVolume) {
  auto rec = flat_reconstruction(64);
  for (auto& x : rec.frame.xi) x *= 1.01;
  const auto g = flat(64);
  const auto r = verify_immersion(rec.frame, g, levi_civita(g));
  EXPECT_NEAR(r.volume, 0.01, 1e-8);
  EXPECT_GT(r.weingarten, 1e-3);
}

TEST(Verify, ChartMismatch) {
  const auto rec = flat_reconstruction(33);
  const auto g = flat(17);
  EXPECT_THROW(verify_immersion(rec.frame, g, levi_civita(g)), ChartMismatchError);
}

TEST(Mesh, Counts) {
  const auto rec = flat_reconstruction(9);
  const auto full = make_mesh(rec.frame);
  EXPECT_EQ(full.vertices.size(), 81u);
  EXPECT_EQ(full.triangles.size(), 128u);
  const auto small = make_mesh(rec.frame, 2, 2);
  EXPECT_EQ(small.vertices.size(), 4u);
  EXPECT_EQ(small.triangles.size(), 2u);
  EXPECT_EQ(small.vertices[3], rec.frame.position.back());
  EXPECT_THROW(make_mesh(rec.frame, 1, 2), DomainError);
  EXPECT_THROW(make_mesh(rec.frame, 10, 2), DomainError);
}

TEST(Mesh, FilesAreByteStable) {
  const auto dir = std::filesystem::temp_directory_path() / "blaschke_frame_test";
  std::filesystem::create_directories(dir);
  const auto mesh = make_mesh(flat_reconstruction(17).frame);
  const auto again = make_mesh(flat_reconstruction(17).frame);
  for (auto fmt : {MeshFormat::obj, MeshFormat::ply}) {
    const auto a = (dir / "a").string(), b = (dir / "b").string();
    export_mesh(mesh, fmt, a);
    export_mesh(again, fmt, b);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_EQ(slurp(a), mesh_text(mesh, fmt));
  }
  EXPECT_EQ(mesh_text(mesh, MeshFormat::ply).rfind("ply\nformat ascii 1.0\n", 0), 0u);
  const auto path = (dir / "m.obj").string();
  export_mesh(mesh, MeshFormat::obj, path);
  const auto back = read_obj(path);
  ASSERT_EQ(back.vertices.size(), mesh.vertices.size());
  for (std::size_t k = 0; k < back.vertices.size(); ++k) EXPECT_EQ(back.vertices[k], mesh.vertices[k]);
  EXPECT_EQ(back.triangles, mesh.triangles);
  std::filesystem::remove_all(dir);
}

TEST(Mesh, ExportToMissingDirectoryFails) {
  const auto mesh = make_mesh(flat_reconstruction(9).frame);
  EXPECT_THROW(export_mesh(mesh, MeshFormat::obj, "/nonexistent/dir/m.obj"), IoError);
  EXPECT_THROW(read_obj("/nonexistent/dir/m.obj"), IoError);
}

TEST(Mesh, OppositeSignsGiveDifferentSurfaces) {
  const auto plus = make_mesh(flat_reconstruction(17, 1).frame);
  const auto minus = make_mesh(flat_reconstruction(17, -1).frame);
  double diff = 0.0;
  for (std::size_t k = 0; k < plus.vertices.size(); ++k)
    diff = std::max(diff, (plus.vertices[k] - minus.vertices[k]).norm());
  EXPECT_GT(diff, 1e-3);
}
