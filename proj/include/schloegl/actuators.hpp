// Indicator-function actuators on a tensor grid of boxes.
//
// For grid parameter M and width fraction r, actuator j is the indicator of
// the box centred at ((2k-1) L_1 / (2M), (2l-1) L_2 / (2M)) with per-axis
// half-widths r L_n / (2M). Boxes are disjoint, so the actuator Gram matrix
// is diagonal with entries vol(w_j) and the L2 projection onto the actuator
// span reduces to box averages.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "schloegl/fem.hpp"

namespace schloegl {

/// Element of R^{M_sigma}: one amplitude per actuator.
using ControlVector = Eigen::VectorXd;

enum class NormKind { Euclidean, Max };

double control_norm(const ControlVector& u, NormKind norm);
const char* to_string(NormKind norm);
NormKind parse_norm_kind(const std::string& text);

struct Box {
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;

  [[nodiscard]] double volume() const { return (x1 - x0) * (y1 - y0); }
  [[nodiscard]] bool contains(const Point& p) const { return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1; }
};

class ActuatorGrid {
 public:
  ActuatorGrid(int m, double r, const RectangleDomain& domain);

  [[nodiscard]] int m() const { return m_; }
  [[nodiscard]] double r() const { return r_; }
  [[nodiscard]] int count() const { return static_cast<int>(boxes_.size()); }
  [[nodiscard]] const RectangleDomain& domain() const { return domain_; }
  [[nodiscard]] const std::vector<Point>& centers() const { return centers_; }
  [[nodiscard]] const std::vector<Box>& boxes() const { return boxes_; }
  [[nodiscard]] Eigen::VectorXd volumes() const;
  /// Fraction of the domain covered by the actuators, r^2.
  [[nodiscard]] double coverage() const;

 private:
  int m_;
  double r_;
  RectangleDomain domain_;
  std::vector<Point> centers_;
  std::vector<Box> boxes_;
};

ActuatorGrid build_actuator_grid(int m, double r, const RectangleDomain& domain);

/// B_ij = integral of phi_i * 1_{w_j}; gram_j = vol(w_j).
struct CouplingMatrix {
  Eigen::SparseMatrix<double> b;
  Eigen::VectorXd gram;

  [[nodiscard]] int n_nodes() const { return static_cast<int>(b.rows()); }
  [[nodiscard]] int n_actuators() const { return static_cast<int>(b.cols()); }
};

/// Exact integration by clipping every triangle against every box.
CouplingMatrix discretize_actuators(const ActuatorGrid& grid, const StructuredTriangulation& mesh);

/// Load vector B u, i.e. the pairing of sum_j u_j 1_{w_j} with each basis function.
Eigen::VectorXd apply_control_operator(const CouplingMatrix& coupling, const ControlVector& u);

/// Coefficients c_j = (z, 1_{w_j}) / vol(w_j) of the L2 projection of z onto the actuator span.
ControlVector project_onto_actuator_span(const NodalField& z, const CouplingMatrix& coupling);

/// Squared L2 norm of sum_j c_j 1_{w_j}.
double actuator_span_norm_squared(const ControlVector& coefficients, const CouplingMatrix& coupling);

/// Operator norm of (U_M)^{-1} P_{U_M} from L2 into R^{M_sigma}: (min_j vol(w_j))^{-1/2}.
/// Holds for both the Euclidean and the max norm.
double control_operator_inverse_norm(const ActuatorGrid& grid);

}  // namespace schloegl
