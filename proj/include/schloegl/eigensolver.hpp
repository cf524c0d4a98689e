// Lowest eigenpairs of a symmetric-definite pencil A x = theta M x by block
// subspace iteration with shift-invert at zero and Rayleigh-Ritz extraction.
#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace schloegl {

/// Maps a block of vectors to a block of vectors.
using BlockOperator = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

struct EigenSettings {
  int nev = 1;
  int block = 8;
  int max_iterations = 3000;
  /// Relative residual ||A x - theta M x|| / (|theta| ||M x||).
  double tol = 1e-8;
  std::uint64_t seed = 12345;
};

struct EigenResult {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  Eigen::VectorXd residuals;
  int iterations = 0;
};

class EigenNotConverged : public std::runtime_error {
 public:
  EigenNotConverged(int iterations, double residual);
  [[nodiscard]] double residual() const { return residual_; }

 private:
  double residual_;
};

/// `apply_a` computes A X, `solve_a` computes A^{-1} X. A and M must be SPD.
EigenResult lowest_generalized_eigenpairs(const BlockOperator& apply_a, const BlockOperator& solve_a,
                                          const Eigen::SparseMatrix<double>& mass, const EigenSettings& settings = {});

}  // namespace schloegl
