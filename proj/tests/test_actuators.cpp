#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "schloegl/actuators.hpp"
#include "test_support.hpp"

using namespace schloegl;

namespace {

const RectangleDomain kUnit(1.0, 1.0);

}  // namespace

TEST(ActuatorGrid, SingleBox) {
  const ActuatorGrid g(1, 0.5, kUnit);
  ASSERT_EQ(g.count(), 1);
  const Box& b = g.boxes()[0];
  EXPECT_DOUBLE_EQ(b.x0, 0.25);
  EXPECT_DOUBLE_EQ(b.x1, 0.75);
  EXPECT_DOUBLE_EQ(b.y0, 0.25);
  EXPECT_DOUBLE_EQ(b.y1, 0.75);
  EXPECT_DOUBLE_EQ(b.volume(), 0.25);
}

TEST(ActuatorGrid, FourBoxesIndexFastestInX) {
  const ActuatorGrid g(2, 0.5, kUnit);
  ASSERT_EQ(g.count(), 4);
  const double cx[] = {0.25, 0.75, 0.25, 0.75};
  const double cy[] = {0.25, 0.25, 0.75, 0.75};
  for (int j = 0; j < 4; ++j) {
    EXPECT_DOUBLE_EQ(g.centers()[j].x, cx[j]);
    EXPECT_DOUBLE_EQ(g.centers()[j].y, cy[j]);
    EXPECT_DOUBLE_EQ(g.boxes()[j].x1 - g.boxes()[j].x0, 0.25);
  }
}

TEST(ActuatorGrid, CoverageIsRSquared) {
  const RectangleDomain d(2.0, 3.0);
  for (int m : {1, 2, 3, 5}) {
    for (double r : {0.2, 0.5, 0.9}) {
      const ActuatorGrid g(m, r, d);
      EXPECT_NEAR(g.volumes().sum(), r * r * d.area(), 1e-13);
      EXPECT_NEAR(g.coverage(), r * r, 1e-15);
    }
  }
  EXPECT_THROW(ActuatorGrid(0, 0.5, kUnit), std::invalid_argument);
  EXPECT_THROW(ActuatorGrid(2, 1.0, kUnit), std::invalid_argument);
}

TEST(Coupling, ColumnSumsAreVolumes) {
  const auto mesh = build_mesh(13, 11, kUnit);
  const ActuatorGrid g(3, 0.37, kUnit);
  const auto c = discretize_actuators(g, mesh);
  const Vector one = Vector::Ones(mesh.n_nodes());
  const Vector sums = c.b.transpose() * one;
  for (int j = 0; j < g.count(); ++j) {
    EXPECT_NEAR(sums(j), g.boxes()[j].volume(), 1e-15);
    EXPECT_DOUBLE_EQ(c.gram(j), g.boxes()[j].volume());
  }
}

TEST(Coupling, ExactForLinearFields) {
  // The box integral of a linear field is vol * value at the box centre.
  const auto mesh = build_mesh(9, 7, kUnit);
  const ActuatorGrid g(2, 0.61, kUnit);
  const auto c = discretize_actuators(g, mesh);
  const auto fn = [](const Point& p) { return 1.5 - 2.0 * p.x + 0.7 * p.y; };
  const Vector v = interpolate(mesh, fn);
  const Vector pairing = c.b.transpose() * v;
  for (int j = 0; j < g.count(); ++j) {
    EXPECT_NEAR(pairing(j), g.boxes()[j].volume() * fn(g.centers()[j]), 1e-14);
  }
}

TEST(Coupling, AlignedBoxMatchesSubmeshMass) {
  // Box (0.25, 0.75)^2 on an 8x8 mesh is a union of whole cells, so B
  // equals the mass matrix assembled on those cells applied to ones.
  const auto mesh = build_mesh(8, 8, kUnit);
  const ActuatorGrid g(1, 0.5, kUnit);
  const auto c = discretize_actuators(g, mesh);
  Vector expected = Vector::Zero(mesh.n_nodes());
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    Point centroid{0.0, 0.0};
    for (int v : tri) {
      centroid.x += mesh.node(v).x / 3.0;
      centroid.y += mesh.node(v).y / 3.0;
    }
    if (!g.boxes()[0].contains(centroid)) continue;
    const auto em = element_mass(mesh.signed_area(t));
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) expected(tri[a]) += em[a][b];
    }
  }
  const Vector col = c.b.col(0);
  EXPECT_LT((col - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Coupling, BoxInsideOneTriangle) {
  // One cell, tiny centred box away from the diagonal.
  const auto mesh = build_mesh(1, 1, kUnit);
  const ActuatorGrid g(1, 0.1, RectangleDomain(1.0, 1.0));
  // The centred box straddles the diagonal, so use a shifted mesh domain instead.
  const RectangleDomain big(4.0, 4.0);
  const auto coarse = build_mesh(1, 1, big);
  const ActuatorGrid small(4, 0.2, big);
  const auto c = discretize_actuators(small, coarse);
  // Box 1 is centred at (1.5, 0.5), strictly below the cell diagonal.
  const Eigen::VectorXd col = c.b.col(1);
  int nnz = 0;
  for (Eigen::Index i = 0; i < col.size(); ++i) nnz += col(i) != 0.0 ? 1 : 0;
  EXPECT_EQ(nnz, 3);
  EXPECT_NEAR(col.sum(), small.boxes()[1].volume(), 1e-15);
  (void)mesh;
  (void)g;
}

TEST(ControlOperator, LoadAndPairings) {
  const auto mesh = build_mesh(10, 10, kUnit);
  const ActuatorGrid g(2, 0.5, kUnit);
  const auto c = discretize_actuators(g, mesh);
  const ControlVector zero = ControlVector::Zero(4);
  EXPECT_EQ(apply_control_operator(c, zero).cwiseAbs().maxCoeff(), 0.0);
  const ControlVector e1 = ControlVector::Unit(4, 0);
  EXPECT_EQ((apply_control_operator(c, e1) - Vector(c.b.col(0))).cwiseAbs().maxCoeff(), 0.0);
  const ControlVector u(Eigen::Vector4d(1.0, -2.0, 0.5, 3.0));
  const double total = apply_control_operator(c, u).sum();
  EXPECT_NEAR(total, u.dot(g.volumes()), 1e-14);
  EXPECT_THROW(apply_control_operator(c, ControlVector::Zero(3)), std::invalid_argument);
}

TEST(Projection, ConstantsAndLinearField) {
  const auto mesh = build_mesh(12, 12, kUnit);
  const ActuatorGrid g(3, 0.5, kUnit);
  const auto c = discretize_actuators(g, mesh);
  const ControlVector k = project_onto_actuator_span(Vector::Constant(mesh.n_nodes(), -1.25), c);
  for (int j = 0; j < 9; ++j) EXPECT_NEAR(k(j), -1.25, 1e-14);

  const ActuatorGrid one(1, 0.5, kUnit);
  const auto c1 = discretize_actuators(one, mesh);
  const Vector x = interpolate(mesh, [](const Point& p) { return p.x; });
  EXPECT_NEAR(project_onto_actuator_span(x, c1)(0), 0.5, 1e-14);

  // Field vanishing on every box closure.
  const Vector outside = interpolate(mesh, [](const Point& p) { return p.x < 0.2 ? 1.0 : 0.0; });
  const ActuatorGrid single(1, 0.5, kUnit);
  EXPECT_EQ(project_onto_actuator_span(outside, discretize_actuators(single, mesh))(0), 0.0);
}

TEST(Projection, IdempotenceOrthogonalityContraction) {
  const auto mesh = build_mesh(14, 14, kUnit);
  const ActuatorGrid g(3, 0.45, kUnit);
  const auto c = discretize_actuators(g, mesh);
  const auto mass = assemble_mass(mesh);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector z = test_util::random_field(mesh.n_nodes(), rng);
    const ControlVector k = project_onto_actuator_span(z, c);
    // (z - Pz, 1_w_j) = (z, 1_w_j) - k_j vol_j.
    const Vector pair = c.b.transpose() * z;
    for (int j = 0; j < g.count(); ++j) {
      EXPECT_LE(std::abs(pair(j) - k(j) * g.volumes()(j)), 1e-10 * std::abs(pair(j)) + 1e-16);
    }
    // Projecting sum_j k_j 1_w_j: its pairing with 1_w_i is k_i vol_i.
    const ControlVector again = (k.array() * g.volumes().array() / c.gram.array()).matrix();
    EXPECT_LT((again - k).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE(std::sqrt(actuator_span_norm_squared(k, c)), l2_norm(z, mass) + 1e-14);
  }
}

TEST(ControlOperator, InverseNormClosedForm) {
  EXPECT_DOUBLE_EQ(control_operator_inverse_norm(ActuatorGrid(1, 0.5, kUnit)), 2.0);
  EXPECT_NEAR(control_operator_inverse_norm(ActuatorGrid(3, 0.5, kUnit)), 6.0, 1e-13);
  for (int m : {1, 2, 4}) {
    for (double r : {0.3, 0.7}) {
      EXPECT_NEAR(control_operator_inverse_norm(ActuatorGrid(m, r, kUnit)), m / r, 1e-12);
    }
  }
}

TEST(ControlOperator, InverseNormMatchesSingularValues) {
  // ||(U)^{-1} P w||_2 over ||w||_L2 = 1 on the discrete space: the largest
  // generalized eigenvalue of (B G^{-2} B^T, M).
  const auto mesh = build_mesh(8, 8, kUnit);
  const ActuatorGrid g(2, 0.5, kUnit);
  const auto c = discretize_actuators(g, mesh);
  const Eigen::MatrixXd b(c.b);
  const Eigen::MatrixXd a = b * c.gram.array().square().inverse().matrix().asDiagonal() * b.transpose();
  const Eigen::MatrixXd m(assemble_mass(mesh));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, m);
  const double discrete = std::sqrt(es.eigenvalues().maxCoeff());
  // The discrete space cannot concentrate mass exactly on a box, so the
  // continuum value bounds it from above and is approached closely.
  EXPECT_LE(discrete, control_operator_inverse_norm(g) + 1e-12);
  EXPECT_GT(discrete, 0.8 * control_operator_inverse_norm(g));
}

TEST(Norms, EuclideanAndMax) {
  const ControlVector v(Eigen::Vector3d(3.0, -4.0, 0.0));
  EXPECT_DOUBLE_EQ(control_norm(v, NormKind::Euclidean), 5.0);
  EXPECT_DOUBLE_EQ(control_norm(v, NormKind::Max), 4.0);
  EXPECT_EQ(parse_norm_kind("linf"), NormKind::Max);
  EXPECT_EQ(parse_norm_kind("euclidean"), NormKind::Euclidean);
  EXPECT_THROW(parse_norm_kind("l1"), std::invalid_argument);
}
