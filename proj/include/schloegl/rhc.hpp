// Finite-horizon constrained optimal control and the receding-horizon loop.
//
// Each window minimizes
//
//   J_T(u) = int_{t0}^{t0+T} ||y - yhat||^2 dt + beta int_{t0}^{t0+T} |u|^2 dt
//
// over controls that are piecewise constant per time step, subject to the
// same CN/AB2 recursion the plant uses. The state term is integrated with
// the composite trapezoid rule; the control term is exact for piecewise
// constant controls. Gradients are exact gradients of this discrete cost,
// obtained from the transposed recursion.
#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "schloegl/feedback.hpp"

namespace schloegl {

/// M_sigma x N_steps; column n is active on [t0 + n k, t0 + (n+1) k).
using DiscreteControl = Eigen::MatrixXd;

struct OcpProblem {
  ControlledSystem system;
  /// Window start as a global step index (t0 = start_step * k).
  long start_step = 0;
  long n_steps = 0;
  Vector y0;
  /// Plant state one step before y0, continuing the Adams-Bashforth history.
  std::optional<Vector> y_prev;
  std::shared_ptr<const TargetTrajectory> target;
  double beta = 1e-3;
  SaturationConfig sat;

  [[nodiscard]] double dt() const { return system.op->dt(); }
  [[nodiscard]] double t0() const { return static_cast<double>(start_step) * dt(); }
  [[nodiscard]] double horizon() const { return static_cast<double>(n_steps) * dt(); }
  [[nodiscard]] int n_controls() const { return system.coupling->n_actuators(); }
  void validate() const;
};

struct CostEvaluation {
  double cost = 0.0;
  double state_cost = 0.0;
  double control_cost = 0.0;
  /// y^0 .. y^N on the window.
  std::vector<Vector> states;
};

CostEvaluation evaluate_cost(const DiscreteControl& u, const OcpProblem& prob);

/// Adjoint states p^1 .. p^N (index n holds p^{n+1}) for the forward trajectory.
std::vector<Vector> solve_adjoint(const std::vector<Vector>& states, const OcpProblem& prob);

/// Euclidean gradient of the discrete cost with respect to the entries of u:
/// g^n = 2 beta k u^n + B^T p^{n+1}.
DiscreteControl reduced_gradient(const DiscreteControl& u, const std::vector<Vector>& adjoint,
                                 const OcpProblem& prob);

/// Convenience: forward, adjoint and gradient in one call.
DiscreteControl cost_gradient(const DiscreteControl& u, const OcpProblem& prob, double* cost = nullptr);

/// Columnwise projection onto {|||u^n||| <= C_u}. Radial for the Euclidean
/// norm; componentwise clipping for the max norm (the metric projection onto
/// the box, which is what a projected gradient step needs).
DiscreteControl project_admissible(const DiscreteControl& u, const SaturationConfig& sat);

/// L2-in-time inner product k * sum_n u^n . v^n.
double time_inner(const DiscreteControl& u, const DiscreteControl& v, double dt);

struct OptimizerSettings {
  double tol = 1e-4;
  int max_iterations = 500;
  int nonmonotone_window = 10;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double alpha_min = 1e-8;
  double alpha_max = 1e8;
  int max_backtracks = 40;
};

struct OptimizerResult {
  DiscreteControl u;
  double cost = 0.0;
  double initial_cost = 0.0;
  int iterations = 0;
  int cost_evaluations = 0;
  bool converged = false;
  /// Set when the iteration cap or a failed line search ended the run.
  bool warning = false;
};

/// Projected gradient with Barzilai-Borwein trial steps and a nonmonotone
/// Armijo line search along the projection arc.
OptimizerResult bb_projected_gradient(const OcpProblem& prob, const DiscreteControl& u_init,
                                      const OptimizerSettings& settings = {});

/// Controls produced by running the saturated feedback on the window.
DiscreteControl feedback_window_controls(const OcpProblem& prob, const FeedbackLaw& law);

enum class WarmStart { Shift, Feedback };

struct RhcConfig {
  double delta = 0.5;
  double horizon = 1.25;
  double t_inf = 5.0;
  double beta = 1e-3;
  SaturationConfig sat;
  /// Gain of the saturated feedback used as the first iterate.
  double initial_lambda = 175.0;
  WarmStart warm_start = WarmStart::Shift;
  OptimizerSettings optimizer;

  void validate(double dt) const;
};

struct WindowReport {
  double t0 = 0.0;
  int iterations = 0;
  int cost_evaluations = 0;
  bool converged = false;
  double initial_cost = 0.0;
  double final_cost = 0.0;
};

struct RhcResult {
  TrajectoryRecord plant;
  std::vector<WindowReport> windows;
  /// J over [0, T_inf].
  double total_cost = 0.0;
  bool warnings = false;
};

/// Horizon the target trajectory must cover for a receding-horizon run.
double rhc_target_horizon(const RhcConfig& cfg);

RhcResult run_rhc(const RhcConfig& cfg, const NodalField& y0, std::shared_ptr<const TargetTrajectory> target,
                  const ControlledSystem& system, int state_stride = 10);

}  // namespace schloegl
