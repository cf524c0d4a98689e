// Saturated explicit feedback u = P_Cu(-lambda (U_M)^{-1} P_{U_M} (y - yhat)).
#pragma once

#include <cmath>
#include <limits>
#include <memory>

#include "schloegl/actuators.hpp"
#include "schloegl/dynamics.hpp"

namespace schloegl {

struct SaturationConfig {
  /// C_u in [0, +inf]; +inf means unconstrained.
  double bound = std::numeric_limits<double>::infinity();
  NormKind norm = NormKind::Euclidean;

  [[nodiscard]] bool unconstrained() const { return std::isinf(bound); }
  void validate() const;
};

/// Radial projection onto the ball of radius C_u: v if |||v||| <= C_u, else (C_u / |||v|||) v.
ControlVector radial_project(const ControlVector& v, const SaturationConfig& sat);

/// Scaling factor min{1, C_u / |||v|||} applied by radial_project (1 for v = 0).
double radial_scale(const ControlVector& v, const SaturationConfig& sat);

struct FeedbackLaw {
  double lambda = 0.0;
  SaturationConfig sat;

  void validate() const;
};

ControlVector saturated_feedback(const NodalField& z, const FeedbackLaw& law, const CouplingMatrix& coupling);

/// (U_M u, z)_{L2}.
double feedback_dissipation(const NodalField& z, const ControlVector& u, const CouplingMatrix& coupling);

/// Precomputed free-dynamics target with every step stored.
using TargetTrajectory = TrajectoryRecord;

/// Plant plus actuators: everything a controlled simulation needs.
struct ControlledSystem {
  std::shared_ptr<const CnabOperator> op;
  std::shared_ptr<const CouplingMatrix> coupling;
  ForcingSpec forcing;
};

/// Assembles M h^n + B u^n into `out`. Every simulation path goes through here.
void assemble_step_load(Vector& out, const Vector& forcing_load, const CouplingMatrix& coupling,
                        const ControlVector& u);

/// Accumulates tracking diagnostics while a plant is stepped against a target.
class TrackingRecorder {
 public:
  TrackingRecorder(const Model& model, const TargetTrajectory& target, const IntegratorConfig& cfg, long n_steps,
                   int n_controls, NormKind constraint_norm);

  /// Logs the control applied on step n; call before advancing.
  void control(long n, const ControlVector& u);
  /// Logs the integrator's current level.
  void sample(const CnabIntegrator& integ);
  [[nodiscard]] const TrajectoryRecord& record() const { return rec_; }
  TrajectoryRecord finish() { return std::move(rec_); }

 private:
  const Model& model_;
  const TargetTrajectory& target_;
  IntegratorConfig cfg_;
  long n_steps_;
  NormKind constraint_norm_;
  double pending_control_cost_ = 0.0;
  TrajectoryRecord rec_;
};

/// Checks that a target trajectory can drive a controlled run of n_steps.
void require_target_coverage(const TargetTrajectory& target, double dt, long n_steps);

/// Runs the plant from y0 over the target's full horizon with u^n = K(y^n - yhat^n).
/// Records ||y - yhat||, controls and the running cost (with cfg.beta).
TrajectoryRecord closed_loop_simulate(const NodalField& y0, const TargetTrajectory& target, const FeedbackLaw& law,
                                      const ControlledSystem& system, const IntegratorConfig& cfg,
                                      double horizon = -1.0);

/// Replays a prescribed control sequence (one column per step) against the target.
TrajectoryRecord open_loop_simulate(const NodalField& y0, const TargetTrajectory& target, const Eigen::MatrixXd& controls,
                                    const ControlledSystem& system, const IntegratorConfig& cfg,
                                    NormKind constraint_norm = NormKind::Euclidean);

}  // namespace schloegl
