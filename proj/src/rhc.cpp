#include "schloegl/rhc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace schloegl {

void OcpProblem::validate() const {
  if (!system.op || !system.coupling) throw std::invalid_argument("OcpProblem: system is incomplete");
  if (!target) throw std::invalid_argument("OcpProblem: missing target");
  if (start_step < 0) throw std::invalid_argument("OcpProblem: negative start step");
  if (n_steps < 1) throw std::invalid_argument("OcpProblem: horizon must contain at least one step");
  if (y0.size() != system.op->n_nodes()) throw std::invalid_argument("OcpProblem: initial state has wrong length");
  if (y_prev && y_prev->size() != y0.size()) throw std::invalid_argument("OcpProblem: history has wrong length");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("OcpProblem: beta must be >= 0");
  sat.validate();
  require_target_coverage(*target, dt(), start_step + n_steps);
}

namespace {

double trapezoid_weight(long n, long n_steps, double dt) { return (n == 0 || n == n_steps) ? 0.5 * dt : dt; }

void check_control_shape(const DiscreteControl& u, const OcpProblem& prob) {
  if (u.rows() != prob.n_controls() || u.cols() != prob.n_steps) {
    throw std::invalid_argument("control has shape " + std::to_string(u.rows()) + "x" + std::to_string(u.cols()) +
                                ", expected " + std::to_string(prob.n_controls()) + "x" +
                                std::to_string(prob.n_steps));
  }
}

const Vector& target_at(const OcpProblem& prob, long n) {
  return prob.target->states[static_cast<std::size_t>(prob.start_step + n)];
}

void reset_window(CnabIntegrator& integ, const OcpProblem& prob) {
  if (prob.y_prev) {
    integ.reset(prob.y0, *prob.y_prev, prob.start_step);
  } else {
    integ.reset(prob.y0, prob.start_step);
  }
}

}  // namespace

CostEvaluation evaluate_cost(const DiscreteControl& u, const OcpProblem& prob) {
  prob.validate();
  check_control_shape(u, prob);
  const auto& mass = prob.system.op->model().mass;
  const double k = prob.dt();
  ForcingLoad forcing(prob.system.forcing, prob.system.op->model_ptr());
  CnabIntegrator integ(prob.system.op);
  reset_window(integ, prob);

  CostEvaluation out;
  out.states.reserve(static_cast<std::size_t>(prob.n_steps + 1));
  out.states.push_back(integ.state());
  Vector load(prob.system.op->n_nodes());
  for (long n = 0; n < prob.n_steps; ++n) {
    assemble_step_load(load, forcing.at(integ.time()), *prob.system.coupling, u.col(n));
    integ.advance(load);
    out.states.push_back(integ.state());
  }
  for (long n = 0; n <= prob.n_steps; ++n) {
    const Vector e = out.states[static_cast<std::size_t>(n)] - target_at(prob, n);
    out.state_cost += trapezoid_weight(n, prob.n_steps, k) * e.dot(mass * e);
  }
  out.control_cost = prob.beta * k * u.squaredNorm();
  out.cost = out.state_cost + out.control_cost;
  return out;
}

std::vector<Vector> solve_adjoint(const std::vector<Vector>& states, const OcpProblem& prob) {
  const long n_steps = prob.n_steps;
  if (static_cast<long>(states.size()) != n_steps + 1) {
    throw std::invalid_argument("solve_adjoint: expected " + std::to_string(n_steps + 1) + " states");
  }
  const CnabOperator& op = *prob.system.op;
  const auto& mass = op.model().mass;
  const auto& params = op.model().params;
  const double k = prob.dt();
  const int n = op.n_nodes();

  // Step m >= 1 always uses AB2 weights (3/2, 1/2); the start-up weights only
  // touch y^0, which is fixed.
  constexpr double a = 1.5;
  constexpr double b = 0.5;

  std::vector<Vector> adjoint(static_cast<std::size_t>(n_steps));
  Vector p_next = Vector::Zero(n);
  Vector mp_next = Vector::Zero(n);
  Vector mp_next2 = Vector::Zero(n);
  for (long m = n_steps; m >= 1; --m) {
    const Vector& y = states[static_cast<std::size_t>(m)];
    const Vector e = y - target_at(prob, m);
    Vector rhs = (2.0 * trapezoid_weight(m, n_steps, k)) * (mass * e);
    rhs.noalias() += op.explicit_part() * p_next;
    const Vector coupling_term = -a * mp_next + b * mp_next2;
    rhs += cubic_reaction_derivative(y, params).cwiseProduct(coupling_term);
    Vector p = op.solve(rhs);
    mp_next2.swap(mp_next);
    mp_next = mass * p;
    adjoint[static_cast<std::size_t>(m - 1)] = p;
    p_next = std::move(p);
  }
  return adjoint;
}

DiscreteControl reduced_gradient(const DiscreteControl& u, const std::vector<Vector>& adjoint, const OcpProblem& prob) {
  check_control_shape(u, prob);
  if (static_cast<long>(adjoint.size()) != prob.n_steps) {
    throw std::invalid_argument("reduced_gradient: adjoint has wrong length");
  }
  const auto& bt = prob.system.coupling->b;
  DiscreteControl g = (2.0 * prob.beta * prob.dt()) * u;
  for (long n = 0; n < prob.n_steps; ++n) {
    g.col(n).noalias() += bt.transpose() * adjoint[static_cast<std::size_t>(n)];
  }
  return g;
}

DiscreteControl cost_gradient(const DiscreteControl& u, const OcpProblem& prob, double* cost) {
  CostEvaluation ev = evaluate_cost(u, prob);
  if (cost) *cost = ev.cost;
  return reduced_gradient(u, solve_adjoint(ev.states, prob), prob);
}

DiscreteControl project_admissible(const DiscreteControl& u, const SaturationConfig& sat) {
  if (sat.unconstrained()) return u;
  if (sat.norm == NormKind::Max) return u.cwiseMax(-sat.bound).cwiseMin(sat.bound);
  DiscreteControl out = u;
  for (Eigen::Index n = 0; n < u.cols(); ++n) out.col(n) = radial_project(u.col(n), sat);
  return out;
}

double time_inner(const DiscreteControl& u, const DiscreteControl& v, double dt) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) throw std::invalid_argument("time_inner: shape mismatch");
  return dt * (u.array() * v.array()).sum();
}

OptimizerResult bb_projected_gradient(const OcpProblem& prob, const DiscreteControl& u_init,
                                      const OptimizerSettings& settings) {
  prob.validate();
  check_control_shape(u_init, prob);
  const double k = prob.dt();

  OptimizerResult res;
  DiscreteControl u = project_admissible(u_init, prob.sat);
  double cost = 0.0;
  DiscreteControl g = cost_gradient(u, prob, &cost);
  ++res.cost_evaluations;
  res.initial_cost = cost;
  res.u = u;
  res.cost = cost;

  // Gradient in the L2-in-time inner product.
  DiscreteControl grad = g / k;
  const double probe = (project_admissible(u - grad, prob.sat) - u).cwiseAbs().maxCoeff();
  if (probe == 0.0) {
    res.converged = true;
    return res;
  }
  const double alpha0 = std::clamp(1.0 / probe, settings.alpha_min, settings.alpha_max);
  double alpha = alpha0;
  std::deque<double> recent{cost};

  for (int it = 1; it <= settings.max_iterations; ++it) {
    const double ref = *std::max_element(recent.begin(), recent.end());
    double step = alpha;
    DiscreteControl u_new;
    double cost_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt <= settings.max_backtracks; ++bt) {
      u_new = project_admissible(u - step * grad, prob.sat);
      const double decrease = (g.array() * (u_new - u).array()).sum();
      try {
        cost_new = evaluate_cost(u_new, prob).cost;
      } catch (const BlowUpError&) {
        cost_new = std::numeric_limits<double>::infinity();
      }
      ++res.cost_evaluations;
      if (cost_new <= ref + settings.armijo * decrease) {
        accepted = true;
        break;
      }
      step *= settings.backtrack;
    }
    res.iterations = it;
    if (!accepted) {
      res.warning = true;
      break;
    }

    double cost_checked = 0.0;
    DiscreteControl g_new = cost_gradient(u_new, prob, &cost_checked);
    ++res.cost_evaluations;
    const DiscreteControl s = u_new - u;
    const DiscreteControl grad_new = g_new / k;
    const double ss = time_inner(s, s, k);
    const double sy = time_inner(s, grad_new - grad, k);

    u = std::move(u_new);
    g = std::move(g_new);
    grad = grad_new;
    cost = cost_new;
    if (cost < res.cost) {
      res.cost = cost;
      res.u = u;
    }
    recent.push_back(cost);
    while (static_cast<int>(recent.size()) > settings.nonmonotone_window) recent.pop_front();

    if (std::sqrt(ss) < settings.tol) {
      res.converged = true;
      break;
    }
    alpha = (sy > 0.0) ? ss / sy : alpha0;
    if (!(alpha >= settings.alpha_min && alpha <= settings.alpha_max)) alpha = alpha0;
  }
  if (!res.converged) res.warning = true;
  return res;
}

DiscreteControl feedback_window_controls(const OcpProblem& prob, const FeedbackLaw& law) {
  prob.validate();
  law.validate();
  const CouplingMatrix& coupling = *prob.system.coupling;
  ForcingLoad forcing(prob.system.forcing, prob.system.op->model_ptr());
  CnabIntegrator integ(prob.system.op);
  reset_window(integ, prob);

  DiscreteControl u(prob.n_controls(), prob.n_steps);
  Vector load(prob.system.op->n_nodes());
  for (long n = 0; n < prob.n_steps; ++n) {
    u.col(n) = saturated_feedback(integ.state() - target_at(prob, n), law, coupling);
    assemble_step_load(load, forcing.at(integ.time()), coupling, u.col(n));
    integ.advance(load);
  }
  return u;
}

namespace {

bool settings_invalid(const OptimizerSettings& s) {
  return !(s.tol > 0.0) || s.max_iterations < 1 || s.nonmonotone_window < 1 || !(s.armijo > 0.0 && s.armijo < 1.0) ||
         !(s.backtrack > 0.0 && s.backtrack < 1.0) || !(s.alpha_min > 0.0 && s.alpha_min < s.alpha_max) ||
         s.max_backtracks < 0;
}

}  // namespace

void RhcConfig::validate(double dt) const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("rhc: beta must be >= 0");
  sat.validate();
  if (!(initial_lambda >= 0.0)) throw std::invalid_argument("rhc: initial feedback gain must be >= 0");
  const long n_delta = steps_for(delta, dt);
  const long n_horizon = steps_for(horizon, dt);
  const long n_inf = steps_for(t_inf, dt);
  if (n_horizon < n_delta) throw std::invalid_argument("rhc: prediction horizon T must be >= sampling time delta");
  if (n_inf % n_delta != 0) throw std::invalid_argument("rhc: T_inf must be a multiple of delta");
  if (settings_invalid(optimizer)) throw std::invalid_argument("rhc: invalid optimizer settings");
}

double rhc_target_horizon(const RhcConfig& cfg) { return cfg.t_inf - cfg.delta + cfg.horizon; }

namespace {

DiscreteControl shift_controls(const DiscreteControl& prev, long shift, long n_steps) {
  DiscreteControl out(prev.rows(), n_steps);
  const long keep = std::max(0L, std::min(n_steps, static_cast<long>(prev.cols()) - shift));
  if (keep > 0) out.leftCols(keep) = prev.middleCols(shift, keep);
  for (long n = keep; n < n_steps; ++n) out.col(n) = prev.col(prev.cols() - 1);
  return out;
}

}  // namespace

RhcResult run_rhc(const RhcConfig& cfg, const NodalField& y0, std::shared_ptr<const TargetTrajectory> target,
                  const ControlledSystem& system, int state_stride) {
  const double k = system.op->dt();
  cfg.validate(k);
  if (!target) throw std::invalid_argument("run_rhc: missing target");
  const long n_delta = steps_for(cfg.delta, k);
  const long n_horizon = steps_for(cfg.horizon, k);
  const long n_inf = steps_for(cfg.t_inf, k);
  require_target_coverage(*target, k, n_inf - n_delta + n_horizon);

  IntegratorConfig icfg{k, state_stride, cfg.beta};
  const CouplingMatrix& coupling = *system.coupling;
  ForcingLoad forcing(system.forcing, system.op->model_ptr());
  CnabIntegrator plant(system.op);
  plant.reset(y0, 0);
  TrackingRecorder recorder(system.op->model(), *target, icfg, n_inf, coupling.n_actuators(), cfg.sat.norm);
  recorder.sample(plant);

  RhcResult result;
  const FeedbackLaw initial_law{cfg.initial_lambda, cfg.sat};
  DiscreteControl previous;
  Vector load(system.op->n_nodes());
  for (long start = 0; start < n_inf; start += n_delta) {
    OcpProblem prob;
    prob.system = system;
    prob.start_step = start;
    prob.n_steps = n_horizon;
    prob.y0 = plant.state();
    if (plant.has_history()) prob.y_prev = plant.previous_state();
    prob.target = target;
    prob.beta = cfg.beta;
    prob.sat = cfg.sat;

    const DiscreteControl u_init = (start == 0 || cfg.warm_start == WarmStart::Feedback)
                                       ? feedback_window_controls(prob, initial_law)
                                       : shift_controls(previous, n_delta, n_horizon);
    OptimizerResult opt = bb_projected_gradient(prob, u_init, cfg.optimizer);
    result.windows.push_back(WindowReport{prob.t0(), opt.iterations, opt.cost_evaluations, opt.converged,
                                          opt.initial_cost, opt.cost});
    result.warnings = result.warnings || opt.warning;

    for (long n = 0; n < n_delta; ++n) {
      const ControlVector u = opt.u.col(n);
      recorder.control(start + n, u);
      assemble_step_load(load, forcing.at(plant.time()), coupling, u);
      plant.advance(load);
      recorder.sample(plant);
    }
    previous = std::move(opt.u);
  }
  result.plant = recorder.finish();
  result.total_cost = result.plant.running_cost.back();
  return result;
}

}  // namespace schloegl
