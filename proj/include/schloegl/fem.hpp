// P1 finite elements on structured triangulations of a rectangle.
//
// The mesh is a uniform nx-by-ny grid of cells, each cut into two triangles
// along the (i,j)-(i+1,j+1) diagonal. Nodes are numbered row-major:
// node(i, j) = j * (nx + 1) + i. All operators use pure Neumann boundary
// conditions, so no rows are modified after assembly.
#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace schloegl {

using Vector = Eigen::VectorXd;

/// Symmetric sparse operator stored in compressed-row layout.
using SparseSymOperator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Coefficients of a P1 function, one entry per mesh node.
using NodalField = Eigen::VectorXd;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned rectangle (0, lx) x (0, ly).
class RectangleDomain {
 public:
  RectangleDomain(double lx, double ly);

  [[nodiscard]] double lx() const { return lx_; }
  [[nodiscard]] double ly() const { return ly_; }
  [[nodiscard]] double area() const { return lx_ * ly_; }

 private:
  double lx_;
  double ly_;
};

class StructuredTriangulation {
 public:
  using Triangle = std::array<int, 3>;

  StructuredTriangulation(int nx, int ny, const RectangleDomain& domain);

  [[nodiscard]] int nx() const { return nx_; }
  [[nodiscard]] int ny() const { return ny_; }
  [[nodiscard]] const RectangleDomain& domain() const { return domain_; }
  [[nodiscard]] int n_nodes() const { return static_cast<int>(nodes_.size()); }
  [[nodiscard]] int n_triangles() const { return static_cast<int>(triangles_.size()); }
  [[nodiscard]] const std::vector<Point>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<Triangle>& triangles() const { return triangles_; }
  [[nodiscard]] const Point& node(int index) const { return nodes_[static_cast<std::size_t>(index)]; }
  [[nodiscard]] int node_index(int i, int j) const { return j * (nx_ + 1) + i; }

  /// Signed area of triangle t (positive for counter-clockwise orientation).
  [[nodiscard]] double signed_area(int t) const;

 private:
  int nx_;
  int ny_;
  RectangleDomain domain_;
  std::vector<Point> nodes_;
  std::vector<Triangle> triangles_;
};

StructuredTriangulation build_mesh(int nx, int ny, const RectangleDomain& domain);

/// Local P1 mass matrix (area / 12) * [[2,1,1],[1,2,1],[1,1,2]].
std::array<std::array<double, 3>, 3> element_mass(double area);

/// M_ij = integral of phi_i phi_j, integrated exactly.
SparseSymOperator assemble_mass(const StructuredTriangulation& mesh);

/// K_ij = nu * integral of grad phi_i . grad phi_j.
SparseSymOperator assemble_stiffness(const StructuredTriangulation& mesh, double nu);

/// K y evaluated as sum_{j != i} K_ij (y_j - y_i). Requires zero row sums;
/// the result is exactly zero on constant fields.
Vector apply_stiffness(const SparseSymOperator& stiffness, const Vector& y);

/// a^T M b.
double l2_inner(const NodalField& a, const NodalField& b, const SparseSymOperator& mass);
double l2_norm(const NodalField& a, const SparseSymOperator& mass);

/// Nodal interpolant of a scalar function.
NodalField interpolate(const StructuredTriangulation& mesh, const std::function<double(const Point&)>& fn);

}  // namespace schloegl
