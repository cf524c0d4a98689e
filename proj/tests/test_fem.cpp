#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "schloegl/fem.hpp"
#include "test_support.hpp"

using namespace schloegl;

namespace {

const RectangleDomain kUnit(1.0, 1.0);

}  // namespace

TEST(Mesh, CountsSmallGrids) {
  const auto one = build_mesh(1, 1, kUnit);
  EXPECT_EQ(one.n_nodes(), 4);
  EXPECT_EQ(one.n_triangles(), 2);
  const auto two = build_mesh(2, 3, kUnit);
  EXPECT_EQ(two.n_nodes(), 12);
  EXPECT_EQ(two.n_triangles(), 12);
}

TEST(Mesh, AreasTileTheDomain) {
  const auto mesh = build_mesh(40, 40, kUnit);
  EXPECT_EQ(mesh.n_nodes(), 1681);
  long double total = 0.0L;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const double a = mesh.signed_area(t);
    EXPECT_GT(a, 0.0);
    total += a;
  }
  EXPECT_NEAR(static_cast<double>(total), 1.0, 1e-14);
}

TEST(Mesh, RowMajorNodeOrder) {
  const RectangleDomain d(2.0, 1.0);
  const auto mesh = build_mesh(4, 2, d);
  EXPECT_EQ(mesh.node_index(3, 1), 1 * 5 + 3);
  EXPECT_DOUBLE_EQ(mesh.node(mesh.node_index(4, 2)).x, 2.0);
  EXPECT_DOUBLE_EQ(mesh.node(mesh.node_index(4, 2)).y, 1.0);
  EXPECT_DOUBLE_EQ(mesh.node(mesh.node_index(1, 0)).x, 0.5);
}

TEST(Mesh, RejectsBadInput) {
  EXPECT_THROW(build_mesh(0, 3, kUnit), std::invalid_argument);
  EXPECT_THROW(RectangleDomain(-1.0, 1.0), std::invalid_argument);
}

TEST(Mass, ElementMatrix) {
  const double a = 0.37;
  const auto m = element_mass(a);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(m[i][j], a / 12.0 * (i == j ? 2.0 : 1.0));
  }
}

TEST(Mass, PartitionOfUnityAndConstants) {
  const RectangleDomain d(2.0, 0.5);
  const auto mesh = build_mesh(7, 5, d);
  const auto mass = assemble_mass(mesh);
  const Vector one = Vector::Ones(mesh.n_nodes());
  EXPECT_NEAR(one.dot(mass * one), d.area(), 1e-14);
  const double c = -3.5;
  EXPECT_NEAR((c * one).dot(mass * (c * one)), c * c * d.area(), 1e-12);
}

TEST(Mass, PositiveDefiniteOnRandomFields) {
  const auto mesh = build_mesh(9, 9, kUnit);
  const auto mass = assemble_mass(mesh);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Vector v = test_util::random_field(mesh.n_nodes(), rng);
    EXPECT_GT(v.dot(mass * v), 0.0);
  }
}

TEST(Stiffness, KernelSymmetryAndLinearEnergy) {
  const auto mesh = build_mesh(12, 9, kUnit);
  const double nu = 0.1;
  const auto k = assemble_stiffness(mesh, nu);
  const Vector one = Vector::Ones(mesh.n_nodes());
  const double scale = Eigen::MatrixXd(k).cwiseAbs().rowwise().sum().maxCoeff();
  EXPECT_LE((k * one).cwiseAbs().maxCoeff(), 1e-15 * scale);
  EXPECT_EQ(apply_stiffness(k, Vector::Constant(mesh.n_nodes(), -2.75)).cwiseAbs().maxCoeff(), 0.0);
  const Eigen::MatrixXd dense(k);
  EXPECT_EQ((dense - dense.transpose()).cwiseAbs().maxCoeff(), 0.0);
  const Vector w = interpolate(mesh, [](const Point& p) { return p.x; });
  EXPECT_NEAR(w.dot(k * w), nu, 1e-14);
  // grad(2x - 3y) has squared length 13.
  const Vector v = interpolate(mesh, [](const Point& p) { return 2.0 * p.x - 3.0 * p.y; });
  EXPECT_NEAR(v.dot(k * v), 13.0 * nu, 1e-12);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Vector r = test_util::random_field(mesh.n_nodes(), rng);
    EXPECT_GE(r.dot(k * r), 0.0);
  }
  EXPECT_THROW(assemble_stiffness(mesh, 0.0), std::invalid_argument);
}

TEST(Stiffness, EdgeFormMatchesProduct) {
  const auto mesh = build_mesh(7, 10, RectangleDomain(1.5, 0.8));
  const auto k = assemble_stiffness(mesh, 0.2);
  std::mt19937_64 rng(17);
  const Vector y = test_util::random_field(mesh.n_nodes(), rng);
  EXPECT_LT((apply_stiffness(k, y) - k * y).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(L2, InnerProductsOfSimpleFields) {
  const auto mesh = build_mesh(10, 10, kUnit);
  const auto mass = assemble_mass(mesh);
  const Vector one = Vector::Ones(mesh.n_nodes());
  const Vector x = interpolate(mesh, [](const Point& p) { return p.x; });
  EXPECT_NEAR(l2_inner(one, one, mass), 1.0, 1e-14);
  EXPECT_NEAR(l2_inner(x, one, mass), 0.5, 1e-14);
  // x^2 integrates to 1/3; P1 is exact for products of two linear fields.
  EXPECT_NEAR(l2_inner(x, x, mass), 1.0 / 3.0, 1e-14);

  Vector a = Vector::Zero(mesh.n_nodes());
  Vector b = Vector::Zero(mesh.n_nodes());
  a(mesh.node_index(1, 1)) = 1.0;
  b(mesh.node_index(3, 1)) = 1.0;
  EXPECT_EQ(l2_inner(a, b, mass), 0.0);
  EXPECT_THROW(l2_inner(a, Vector::Zero(3), mass), std::invalid_argument);
}

TEST(L2, RefinementConvergesAtSecondOrder) {
  const double exact = 0.5;
  double prev = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const auto mesh = build_mesh(n, n, kUnit);
    const auto mass = assemble_mass(mesh);
    const Vector s = interpolate(mesh, [](const Point& p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); });
    const double err = std::abs(l2_norm(s, mass) - exact);
    if (prev > 0.0) {
      EXPECT_GT(std::log2(prev / err), 1.8);
    }
    prev = err;
  }
}

TEST(Assembly, Deterministic) {
  const auto mesh = build_mesh(11, 6, kUnit);
  const auto a = assemble_stiffness(mesh, 0.3);
  const auto b = assemble_stiffness(mesh, 0.3);
  ASSERT_EQ(a.nonZeros(), b.nonZeros());
  for (Eigen::Index i = 0; i < a.nonZeros(); ++i) EXPECT_EQ(a.valuePtr()[i], b.valuePtr()[i]);
}
