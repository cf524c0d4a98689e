#include "schloegl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

namespace schloegl {

TheoryConstants compute_theory_constants(double mu, const SchloeglParams& params, double domain_area, double lambda,
                                         const ActuatorGrid& grid) {
  if (!(mu > 0.0)) throw std::invalid_argument("decay rate mu must be positive");
  if (!(domain_area > 0.0)) throw std::invalid_argument("domain area must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  TheoryConstants c;
  c.mu = mu;
  c.lambda = lambda;
  c.xi2 = params.xi2();
  c.xi1 = params.xi1();
  c.xi0 = params.xi0();
  const double xi2_sq = c.xi2 * c.xi2;
  c.c_hat = 50.0 / 11.0 * xi2_sq - 2.0 * c.xi1;
  c.c1 = 128.0 / 15.0 * xi2_sq + c.c_hat + 2.0;
  const double inv_area = 1.0 / domain_area;
  c.d_hat = (2.0 * mu + std::sqrt(4.0 * mu * mu + 0.5 * inv_area * c.c1)) / (0.25 * inv_area);
  c.d = std::max(1.0, c.d_hat);
  c.varpi = 2.0 * mu + 128.0 / 15.0 * xi2_sq + c.c_hat + 2.0;
  c.cu_star = lambda * control_operator_inverse_norm(grid) * c.d;
  c.time_to_ball = 1.0 / std::sqrt(mu * mu * c.d);
  return c;
}

MarginReport stabilizability_margin(const Model& model, const CouplingMatrix& coupling, int m, double r, double lambda,
                                    double varpi, const EigenSettings& settings) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("margin: lambda must be >= 0");
  using Sparse = Eigen::SparseMatrix<double>;
  const Sparse a0 = Sparse(model.stiffness) + Sparse(model.mass);
  const Sparse mass = model.mass;
  Eigen::SimplicialLDLT<Sparse> base(a0);
  if (base.info() != Eigen::Success) throw std::runtime_error("margin: factorization of K + M failed");

  // A = A0 + U C U^T with U = B, C = 2 lambda G^{-1}.
  const Eigen::MatrixXd u = Eigen::MatrixXd(coupling.b);
  const Eigen::VectorXd c_diag = (2.0 * lambda) * coupling.gram.cwiseInverse();
  Eigen::MatrixXd a0_inv_u = base.solve(u);
  Eigen::LDLT<Eigen::MatrixXd> capacitance;
  const bool active = lambda > 0.0;
  if (active) {
    Eigen::MatrixXd cap = u.transpose() * a0_inv_u;
    cap.diagonal() += c_diag.cwiseInverse();
    capacitance.compute(0.5 * (cap + cap.transpose()));
  }

  const BlockOperator apply_a = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd y = a0 * x;
    if (active) y.noalias() += u * (c_diag.asDiagonal() * (u.transpose() * x));
    return y;
  };
  const BlockOperator solve_a = [&](const Eigen::MatrixXd& rhs) -> Eigen::MatrixXd {
    Eigen::MatrixXd y = base.solve(rhs);
    if (active) y.noalias() -= a0_inv_u * capacitance.solve(u.transpose() * y);
    return y;
  };

  EigenSettings es = settings;
  es.nev = 1;
  const EigenResult eig = lowest_generalized_eigenpairs(apply_a, solve_a, mass, es);
  MarginReport rep;
  rep.m = m;
  rep.lambda = lambda;
  rep.r = r;
  rep.theta_min = eig.values(0);
  rep.varpi = varpi;
  rep.pass = rep.theta_min >= varpi;
  rep.residual = eig.residuals(0);
  rep.iterations = eig.iterations;
  return rep;
}

MarginReport stabilizability_margin(const Model& model, int m, double r, double lambda, double varpi,
                                    const EigenSettings& settings) {
  const ActuatorGrid grid(m, r, model.mesh.domain());
  const CouplingMatrix coupling = discretize_actuators(grid, model.mesh);
  return stabilizability_margin(model, coupling, m, r, lambda, varpi, settings);
}

namespace {

struct LineFit {
  double slope = 0.0;
  double rms = 0.0;
};

LineFit least_squares_line(const std::vector<double>& t, const std::vector<double>& v, std::size_t first,
                           std::size_t last) {
  const double n = static_cast<double>(last - first + 1);
  double st = 0.0;
  double sv = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    st += t[i];
    sv += v[i];
  }
  const double tm = st / n;
  const double vm = sv / n;
  double stt = 0.0;
  double stv = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    stv += (t[i] - tm) * (v[i] - vm);
  }
  LineFit fit;
  fit.slope = stt > 0.0 ? stv / stt : 0.0;
  double ss = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const double d = v[i] - (vm + fit.slope * (t[i] - tm));
    ss += d * d;
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

}  // namespace

DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& norms) {
  if (times.size() != norms.size()) throw std::invalid_argument("fit_decay_rate: series lengths differ");
  constexpr std::size_t kMinSamples = 10;
  std::size_t above_floor = 0;
  for (double v : norms) above_floor += (std::isfinite(v) && v > kNumericalFloor) ? 1 : 0;
  if (norms.empty() || above_floor < kMinSamples) {
    throw std::invalid_argument("fit_decay_rate: fewer than 10 samples above the numerical floor");
  }
  const double upper = 0.5 * norms.front();
  constexpr double lower = 1e-12;

  std::size_t best_first = 0;
  std::size_t best_len = 0;
  std::size_t run_first = 0;
  std::size_t run_len = 0;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    if (norms[i] >= lower && norms[i] <= upper) {
      if (run_len == 0) run_first = i;
      ++run_len;
      if (run_len > best_len) {
        best_len = run_len;
        best_first = run_first;
      }
    } else {
      run_len = 0;
    }
  }

  DecayFit fit;
  std::size_t first = best_first;
  std::size_t last = best_first + best_len - 1;
  if (best_len < kMinSamples) {
    // No decay phase: fit every sample above the floor.
    fit.decay_window = false;
    first = 0;
    while (!(norms[first] > kNumericalFloor)) ++first;
    last = first;
    while (last + 1 < norms.size() && std::isfinite(norms[last + 1]) && norms[last + 1] > kNumericalFloor) ++last;
    if (last - first + 1 < kMinSamples) {
      throw std::invalid_argument("fit_decay_rate: fewer than 10 contiguous samples above the numerical floor");
    }
  }
  std::vector<double> logs(norms.size(), 0.0);
  for (std::size_t i = first; i <= last; ++i) logs[i] = std::log(norms[i]);
  const LineFit line = least_squares_line(times, logs, first, last);
  fit.mu = -line.slope;
  fit.first = first;
  fit.last = last;
  fit.t_begin = times[first];
  fit.t_end = times[last];
  fit.residual = line.rms;
  return fit;
}

namespace {

void require_positive(double b0, double b1, double b2, double p) {
  if (!(b0 > 0.0 && b1 > 0.0 && b2 > 0.0 && p > 0.0)) {
    throw std::invalid_argument("gen-poly: coefficients and exponent must be positive");
  }
}

}  // namespace

bool check_gen_poly(double b0, double b1, double b2, double p, double x) {
  require_positive(b0, b1, b2, p);
  if (!(x > 0.0)) throw std::invalid_argument("gen-poly: argument must be positive");
  const double lhs = -b2 * std::pow(x, p) + b0 * x;
  const double rhs = -b1 * std::pow(x, 0.5 * (p + 1.0));
  const double scale = std::max({std::abs(b2 * std::pow(x, p)), std::abs(b0 * x), std::abs(rhs)});
  return lhs <= rhs + 1e-12 * scale;
}

double gen_poly_threshold(double b0, double b1, double b2, double p) {
  require_positive(b0, b1, b2, p);
  if (!(p > 1.0)) throw std::invalid_argument("gen-poly: threshold requires p > 1");
  const double root = (b1 + std::sqrt(b1 * b1 + 4.0 * b2 * b0)) / (2.0 * b2);
  return std::pow(root, 2.0 / (p - 1.0));
}

ToyLaw parse_toy_law(const std::string& text) {
  if (text == "saturated") return ToyLaw::Saturated;
  if (text == "max-effort" || text == "max_effort") return ToyLaw::MaxEffort;
  throw std::invalid_argument("unknown ODE control law '" + text + "' (expected saturated or max-effort)");
}

ToySeries ode_toy_simulate(double r, double cu, double mu, double z0, ToyLaw law, double horizon, double step) {
  if (!(horizon > 0.0)) throw std::invalid_argument("ode toy: horizon must be positive");
  if (!(step > 0.0)) throw std::invalid_argument("ode toy: step must be positive");
  if (std::isnan(cu) || cu < 0.0) throw std::invalid_argument("ode toy: C_u must be >= 0");
  const auto control = [&](double z) {
    if (law == ToyLaw::MaxEffort) return z == 0.0 ? 0.0 : -std::copysign(cu, z);
    const double v = (r - 2.0 * mu) * z;
    return std::clamp(v, -cu, cu);
  };
  const auto rhs = [&](double z) { return -r * z + control(z); };
  const long n = std::max(1L, std::lround(horizon / step));
  const double h = horizon / static_cast<double>(n);
  ToySeries s;
  s.t.reserve(static_cast<std::size_t>(n + 1));
  s.z.reserve(static_cast<std::size_t>(n + 1));
  s.u.reserve(static_cast<std::size_t>(n + 1));
  double z = z0;
  for (long i = 0; i <= n; ++i) {
    s.t.push_back(static_cast<double>(i) * h);
    s.z.push_back(z);
    s.u.push_back(control(z));
    if (i == n) break;
    const double k1 = rhs(z);
    const double k2 = rhs(z + 0.5 * h * k1);
    const double k3 = rhs(z + 0.5 * h * k2);
    const double k4 = rhs(z + h * k3);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

}  // namespace schloegl
