// Theory constants, the discrete stabilizability margin, decay-rate fits and
// the scalar ODE toy problems.
#pragma once

#include <string>
#include <vector>

#include "schloegl/actuators.hpp"
#include "schloegl/dynamics.hpp"
#include "schloegl/eigensolver.hpp"

namespace schloegl {

struct TheoryConstants {
  double xi2 = 0.0;
  double xi1 = 0.0;
  double xi0 = 0.0;
  double c_hat = 0.0;
  double c1 = 0.0;
  double d_hat = 0.0;
  /// max{1, D_hat}.
  double d = 1.0;
  double mu = 0.0;
  double lambda = 0.0;
  /// lambda * |||(U_M)^{-1} P_{U_M}||| * D.
  double cu_star = 0.0;
  double varpi = 0.0;
  /// Sufficient time for a large error to enter the ball of radius D: (mu^2 D)^{-1/2}.
  double time_to_ball = 0.0;
};

/// C_hat = (50/11) xi2^2 - 2 xi1, C1 = (128/15) xi2^2 + C_hat + 2,
/// D_hat = (2 mu + sqrt(4 mu^2 + C1 / (2 |Omega|))) / (1 / (4 |Omega|)).
TheoryConstants compute_theory_constants(double mu, const SchloeglParams& params, double domain_area, double lambda,
                                         const ActuatorGrid& grid);

struct MarginReport {
  int m = 0;
  double lambda = 0.0;
  double r = 0.0;
  double theta_min = 0.0;
  double varpi = 0.0;
  bool pass = false;
  double residual = 0.0;
  int iterations = 0;
};

/// Smallest eigenvalue of (K + M + 2 lambda B G^{-1} B^T) w = theta M w.
/// The rank-M_sigma actuator term is handled through the Woodbury identity.
MarginReport stabilizability_margin(const Model& model, const CouplingMatrix& coupling, int m, double r, double lambda,
                                    double varpi, const EigenSettings& settings = {});

/// Convenience overload that builds the actuator grid on the model's mesh.
MarginReport stabilizability_margin(const Model& model, int m, double r, double lambda, double varpi,
                                    const EigenSettings& settings = {});

struct DecayFit {
  double mu = 0.0;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::size_t first = 0;
  std::size_t last = 0;
  /// Root-mean-square deviation of log-norms from the fitted line.
  double residual = 0.0;
  /// False when no window below half the initial norm exists and the whole series was fitted.
  bool decay_window = true;
};

inline constexpr double kNumericalFloor = 1e-14;

/// Least-squares slope of log ||z|| against t over the largest contiguous
/// window with norms in [1e-12, 0.5 ||z(t_0)||]; mu = -slope.
DecayFit fit_decay_rate(const std::vector<double>& times, const std::vector<double>& norms);

/// Whether -b2 x^p + b0 x <= -b1 x^{(p+1)/2}.
bool check_gen_poly(double b0, double b1, double b2, double p, double x);

/// Smallest x satisfying the gen-poly inequality by the sufficient condition
/// x^{(p-1)/2} >= (b1 + sqrt(b1^2 + 4 b2 b0)) / (2 b2).
double gen_poly_threshold(double b0, double b1, double b2, double p);

enum class ToyLaw { Saturated, MaxEffort };

ToyLaw parse_toy_law(const std::string& text);

struct ToySeries {
  std::vector<double> t;
  std::vector<double> z;
  std::vector<double> u;
};

/// dz/dt + r z = u by RK4 at step 1e-4. Saturated: u = P_{C_u}((r - 2 mu) z).
/// MaxEffort: u = -C_u sign(z).
ToySeries ode_toy_simulate(double r, double cu, double mu, double z0, ToyLaw law, double horizon,
                           double step = 1e-4);

}  // namespace schloegl
