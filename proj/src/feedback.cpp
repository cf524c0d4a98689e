#include "schloegl/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace schloegl {

void SaturationConfig::validate() const {
  if (std::isnan(bound) || bound < 0.0) throw std::invalid_argument("control bound C_u must be >= 0");
}

double radial_scale(const ControlVector& v, const SaturationConfig& sat) {
  if (sat.unconstrained()) return 1.0;
  const double n = control_norm(v, sat.norm);
  if (n <= sat.bound) return 1.0;
  return sat.bound / n;
}

ControlVector radial_project(const ControlVector& v, const SaturationConfig& sat) {
  if (sat.unconstrained()) return v;
  const double n = control_norm(v, sat.norm);
  if (n <= sat.bound) return v;
  return (sat.bound / n) * v;
}

void FeedbackLaw::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("feedback gain lambda must be >= 0");
  sat.validate();
}

ControlVector saturated_feedback(const NodalField& z, const FeedbackLaw& law, const CouplingMatrix& coupling) {
  const ControlVector c = project_onto_actuator_span(z, coupling);
  return radial_project(-law.lambda * c, law.sat);
}

double feedback_dissipation(const NodalField& z, const ControlVector& u, const CouplingMatrix& coupling) {
  if (z.size() != coupling.n_nodes() || u.size() != coupling.n_actuators()) {
    throw std::invalid_argument("feedback_dissipation: dimension mismatch");
  }
  return u.dot(coupling.b.transpose() * z);
}

void assemble_step_load(Vector& out, const Vector& forcing_load, const CouplingMatrix& coupling,
                        const ControlVector& u) {
  out = forcing_load;
  out.noalias() += coupling.b * u;
}

void require_target_coverage(const TargetTrajectory& target, double dt, long n_steps) {
  if (std::abs(target.dt - dt) > 1e-15 * dt) {
    throw std::invalid_argument("target trajectory was computed with a different time step");
  }
  if (!target.has_every_state() || target.first_step != 0) {
    throw std::invalid_argument("target trajectory must store every step from t = 0");
  }
  if (target.n_steps() < n_steps) {
    throw std::invalid_argument("target covers " + std::to_string(target.n_steps()) + " steps, need " +
                                std::to_string(n_steps));
  }
}

TrackingRecorder::TrackingRecorder(const Model& model, const TargetTrajectory& target, const IntegratorConfig& cfg,
                                   long n_steps, int n_controls, NormKind constraint_norm)
    : model_(model), target_(target), cfg_(cfg), n_steps_(n_steps), constraint_norm_(constraint_norm) {
  cfg_.validate();
  rec_.dt = cfg.dt;
  rec_.state_stride = cfg.stride;
  rec_.controls.resize(n_controls, n_steps);
}

void TrackingRecorder::control(long n, const ControlVector& u) {
  rec_.controls.col(n) = u;
  const double u2 = u.squaredNorm();
  rec_.control_norm.push_back(std::sqrt(u2));
  rec_.constraint_norm.push_back(control_norm(u, constraint_norm_));
  pending_control_cost_ = cfg_.beta * cfg_.dt * u2;
}

void TrackingRecorder::sample(const CnabIntegrator& integ) {
  const long s = integ.step();
  const Vector& yhat = target_.states[static_cast<std::size_t>(s)];
  const double err = l2_norm(integ.state() - yhat, model_.mass);
  if (rec_.running_cost.empty()) {
    rec_.running_cost.push_back(0.0);
  } else {
    const double e_prev = rec_.error_norm.back();
    rec_.running_cost.push_back(rec_.running_cost.back() + 0.5 * cfg_.dt * (e_prev * e_prev + err * err) +
                                pending_control_cost_);
    pending_control_cost_ = 0.0;
  }
  rec_.times.push_back(integ.time());
  rec_.state_norm.push_back(l2_norm(integ.state(), model_.mass));
  rec_.error_norm.push_back(err);
  if (s % cfg_.stride == 0 || s == n_steps_) {
    rec_.state_steps.push_back(s);
    rec_.states.push_back(integ.state());
  }
}

namespace {

using ControlFn = std::function<ControlVector(long step, const Vector& y, const Vector& yhat)>;

TrajectoryRecord run_controlled(const NodalField& y0, const TargetTrajectory& target, const ControlledSystem& system,
                                const IntegratorConfig& cfg, long n_steps, NormKind constraint_norm,
                                const ControlFn& control) {
  cfg.validate();
  const CnabOperator& op = *system.op;
  if (std::abs(cfg.dt - op.dt()) > 1e-15 * cfg.dt) {
    throw std::invalid_argument("controlled simulation: integrator and operator time steps differ");
  }
  require_target_coverage(target, op.dt(), n_steps);
  const CouplingMatrix& coupling = *system.coupling;
  ForcingLoad forcing(system.forcing, system.op->model_ptr());
  CnabIntegrator integ(system.op);
  integ.reset(y0, 0);

  TrackingRecorder recorder(op.model(), target, cfg, n_steps, coupling.n_actuators(), constraint_norm);
  recorder.sample(integ);
  Vector load(op.n_nodes());
  for (long n = 0; n < n_steps; ++n) {
    const ControlVector u = control(n, integ.state(), target.states[static_cast<std::size_t>(n)]);
    recorder.control(n, u);
    assemble_step_load(load, forcing.at(integ.time()), coupling, u);
    integ.advance(load);
    recorder.sample(integ);
  }
  return recorder.finish();
}

}  // namespace

TrajectoryRecord closed_loop_simulate(const NodalField& y0, const TargetTrajectory& target, const FeedbackLaw& law,
                                      const ControlledSystem& system, const IntegratorConfig& cfg, double horizon) {
  law.validate();
  const long n_steps = horizon > 0.0 ? steps_for(horizon, system.op->dt()) : target.n_steps();
  const CouplingMatrix& coupling = *system.coupling;
  const double slack = law.sat.unconstrained() ? 0.0 : 1e-12 * std::max(1.0, law.sat.bound);
  return run_controlled(y0, target, system, cfg, n_steps, law.sat.norm,
                        [&](long n, const Vector& y, const Vector& yhat) {
                          ControlVector u = saturated_feedback(y - yhat, law, coupling);
                          if (!law.sat.unconstrained() && control_norm(u, law.sat.norm) > law.sat.bound + slack) {
                            throw std::logic_error("saturated feedback exceeded the bound at step " +
                                                   std::to_string(n));
                          }
                          return u;
                        });
}

TrajectoryRecord open_loop_simulate(const NodalField& y0, const TargetTrajectory& target, const Eigen::MatrixXd& controls,
                                    const ControlledSystem& system, const IntegratorConfig& cfg,
                                    NormKind constraint_norm) {
  if (controls.rows() != system.coupling->n_actuators()) {
    throw std::invalid_argument("open_loop_simulate: control rows do not match actuator count");
  }
  return run_controlled(y0, target, system, cfg, controls.cols(), constraint_norm,
                        [&](long n, const Vector&, const Vector&) { return ControlVector(controls.col(n)); });
}

}  // namespace schloegl
