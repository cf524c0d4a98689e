#include "schloegl/eigensolver.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace schloegl {

namespace {

std::string not_converged_message(int iterations, double residual) {
  std::ostringstream os;
  os << "eigensolver did not converge after " << iterations << " iterations (residual " << residual << ")";
  return os.str();
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& x) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  return qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
}

}  // namespace

EigenNotConverged::EigenNotConverged(int iterations, double residual)
    : std::runtime_error(not_converged_message(iterations, residual)), residual_(residual) {}

EigenResult lowest_generalized_eigenpairs(const BlockOperator& apply_a, const BlockOperator& solve_a,
                                          const Eigen::SparseMatrix<double>& mass, const EigenSettings& settings) {
  const Eigen::Index n = mass.rows();
  if (settings.nev < 1 || settings.block < settings.nev) throw std::invalid_argument("eigensolver: bad block size");
  const int block = static_cast<int>(std::min<Eigen::Index>(settings.block, n));
  const int nev = std::min(settings.nev, block);

  std::mt19937_64 rng(settings.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd x(n, block);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = dist(rng);
  }
  // A constant column speeds up the common case where the lowest mode is smooth.
  x.col(0).setOnes();
  x = orthonormal_basis(x);

  EigenResult out;
  double worst = 0.0;
  for (int it = 1; it <= settings.max_iterations; ++it) {
    const Eigen::MatrixXd mx = mass * x;
    const Eigen::MatrixXd y = orthonormal_basis(solve_a(mx));
    const Eigen::MatrixXd ay = apply_a(y);
    const Eigen::MatrixXd my = mass * y;
    Eigen::MatrixXd ar = y.transpose() * ay;
    Eigen::MatrixXd mr = y.transpose() * my;
    ar = 0.5 * (ar + ar.transpose());
    mr = 0.5 * (mr + mr.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(ar, mr);
    if (ritz.info() != Eigen::Success) throw std::runtime_error("eigensolver: Rayleigh-Ritz step failed");

    x = y * ritz.eigenvectors();
    const Eigen::MatrixXd ax = ay * ritz.eigenvectors();
    const Eigen::MatrixXd mxx = my * ritz.eigenvectors();
    out.values = ritz.eigenvalues().head(nev);
    out.residuals.resize(nev);
    worst = 0.0;
    for (int j = 0; j < nev; ++j) {
      const double theta = ritz.eigenvalues()(j);
      const double denom = std::abs(theta) * mxx.col(j).norm();
      const double res = (ax.col(j) - theta * mxx.col(j)).norm() / (denom > 0.0 ? denom : 1.0);
      out.residuals(j) = res;
      worst = std::max(worst, res);
    }
    out.iterations = it;
    if (worst < settings.tol) {
      out.vectors = x.leftCols(nev);
      return out;
    }
    x = orthonormal_basis(x);
  }
  throw EigenNotConverged(settings.max_iterations, worst);
}

}  // namespace schloegl
