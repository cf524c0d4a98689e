#include "schloegl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace schloegl {

double SchloeglParams::zeta_max_abs() const {
  return std::max({std::abs(zeta[0]), std::abs(zeta[1]), std::abs(zeta[2])});
}

void SchloeglParams::validate() const {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("diffusion coefficient nu must be positive");
  for (double z : zeta) {
    if (!std::isfinite(z)) throw std::invalid_argument("reaction roots must be finite");
  }
}

double cubic_reaction(double w, const SchloeglParams& p) {
  return (w - p.zeta[0]) * (w - p.zeta[1]) * (w - p.zeta[2]);
}

Vector cubic_reaction(const Vector& w, const SchloeglParams& p) {
  return ((w.array() - p.zeta[0]) * (w.array() - p.zeta[1]) * (w.array() - p.zeta[2])).matrix();
}

double cubic_reaction_derivative(double w, const SchloeglParams& p) {
  const double a = w - p.zeta[0];
  const double b = w - p.zeta[1];
  const double c = w - p.zeta[2];
  return a * b + a * c + b * c;
}

Vector cubic_reaction_derivative(const Vector& w, const SchloeglParams& p) {
  const auto a = w.array() - p.zeta[0];
  const auto b = w.array() - p.zeta[1];
  const auto c = w.array() - p.zeta[2];
  return (a * b + a * c + b * c).matrix();
}

Vector shifted_reaction(const Vector& z, const Vector& yhat, const SchloeglParams& p) {
  if (z.size() != yhat.size()) throw std::invalid_argument("shifted_reaction: size mismatch");
  const double xi2 = p.xi2();
  const double xi1 = p.xi1();
  const auto zz = z.array();
  const auto yy = yhat.array();
  const auto quad = 3.0 * yy - xi2;
  const auto lin = 3.0 * yy.square() - 2.0 * xi2 * yy - xi1;
  return (((zz + quad) * zz + lin) * zz).matrix();
}

Vector shifted_reaction_derivative(const Vector& z, const Vector& yhat, const SchloeglParams& p) {
  if (z.size() != yhat.size()) throw std::invalid_argument("shifted_reaction_derivative: size mismatch");
  const double xi2 = p.xi2();
  const double xi1 = p.xi1();
  const auto zz = z.array();
  const auto yy = yhat.array();
  return (3.0 * zz.square() + 2.0 * (3.0 * yy - xi2) * zz + (3.0 * yy.square() - 2.0 * xi2 * yy - xi1)).matrix();
}

namespace {

bool periodic_time_active(double t) { return std::abs(std::sin(6.0 * t)) > 0.5; }

double periodic_space_profile(const Point& x) { return (x.x * x.x + x.y * x.y < 0.5) ? 0.5 : 0.0; }

}  // namespace

NodalField eval_forcing(const ForcingSpec& spec, double t, const StructuredTriangulation& mesh) {
  return std::visit(
      [&](const auto& s) -> NodalField {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ZeroForcing>) {
          return NodalField::Zero(mesh.n_nodes());
        } else if constexpr (std::is_same_v<S, PeriodicIndicatorForcing>) {
          if (!periodic_time_active(t)) return NodalField::Zero(mesh.n_nodes());
          return interpolate(mesh, periodic_space_profile);
        } else {
          return interpolate(mesh, [&](const Point& x) { return s.fn(t, x); });
        }
      },
      spec);
}

std::shared_ptr<const Model> Model::create(const StructuredTriangulation& mesh, const SchloeglParams& params) {
  params.validate();
  auto model = std::make_shared<Model>(Model{mesh, assemble_mass(mesh), assemble_stiffness(mesh, params.nu), params});
  return model;
}

CnabOperator::CnabOperator(std::shared_ptr<const Model> model, double dt) : model_(std::move(model)), dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  const SparseSymOperator mass_over_dt = model_->mass / dt;
  const SparseSymOperator half_k = 0.5 * model_->stiffness;
  explicit_ = mass_over_dt - half_k;
  Eigen::SparseMatrix<double> lhs = mass_over_dt + half_k;
  factor_.compute(lhs);
  if (factor_.info() != Eigen::Success) {
    throw std::runtime_error("CnabOperator: factorization of M/k + K/2 failed");
  }
}

Vector CnabOperator::solve(const Vector& rhs) const {
  Vector x = factor_.solve(rhs);
  if (factor_.info() != Eigen::Success) throw std::runtime_error("CnabOperator: solve failed");
  return x;
}

ForcingLoad::ForcingLoad(ForcingSpec spec, std::shared_ptr<const Model> model)
    : spec_(std::move(spec)), model_(std::move(model)) {
  const int n = model_->mesh.n_nodes();
  zero_ = Vector::Zero(n);
  if (std::holds_alternative<PeriodicIndicatorForcing>(spec_)) {
    active_ = model_->mass * interpolate(model_->mesh, periodic_space_profile);
  }
}

const Vector& ForcingLoad::at(double t) {
  if (std::holds_alternative<ZeroForcing>(spec_)) return zero_;
  if (std::holds_alternative<PeriodicIndicatorForcing>(spec_)) {
    return periodic_time_active(t) ? active_ : zero_;
  }
  scratch_ = model_->mass * eval_forcing(spec_, t, model_->mesh);
  return scratch_;
}

namespace {

std::string blowup_message(double time, double max_abs) {
  std::ostringstream os;
  os << "state blew up at t=" << time << " (max |y| = " << max_abs << ")";
  return os.str();
}

}  // namespace

BlowUpError::BlowUpError(double time, double max_abs)
    : std::runtime_error(blowup_message(time, max_abs)), time_(time) {}

Vector step_cnab(const CnabOperator& op, const Vector& y, const Vector* y_prev, const Vector& load) {
  const auto& params = op.model().params;
  Vector reaction = y_prev ? Vector(1.5 * cubic_reaction(y, params) - 0.5 * cubic_reaction(*y_prev, params))
                           : cubic_reaction(y, params);
  Vector rhs = load - apply_stiffness(op.model().stiffness, y);
  rhs.noalias() -= op.model().mass * reaction;
  return y + op.solve(rhs);
}

CnabIntegrator::CnabIntegrator(std::shared_ptr<const CnabOperator> op) : op_(std::move(op)) {}

void CnabIntegrator::reset(const Vector& y0, long step) {
  if (y0.size() != op_->n_nodes()) throw std::invalid_argument("CnabIntegrator: initial state has wrong length");
  y_ = y0;
  f_ = cubic_reaction(y_, op_->model().params);
  y_prev_.resize(0);
  f_prev_.resize(0);
  has_prev_ = false;
  step_ = step;
}

void CnabIntegrator::reset(const Vector& y0, const Vector& y_prev, long step) {
  reset(y0, step);
  if (y_prev.size() != y0.size()) throw std::invalid_argument("CnabIntegrator: previous state has wrong length");
  y_prev_ = y_prev;
  f_prev_ = cubic_reaction(y_prev_, op_->model().params);
  has_prev_ = true;
}

ReactionWeights CnabIntegrator::next_weights() const {
  return has_prev_ ? ReactionWeights{1.5, 0.5} : ReactionWeights{1.0, 0.0};
}

void CnabIntegrator::advance(const Vector& load) {
  const auto& params = op_->model().params;
  Vector reaction = has_prev_ ? Vector(1.5 * f_ - 0.5 * f_prev_) : f_;
  rhs_ = load - apply_stiffness(op_->model().stiffness, y_);
  rhs_.noalias() -= op_->model().mass * reaction;
  Vector next = y_ + op_->solve(rhs_);
  ++step_;
  const double max_abs = next.cwiseAbs().maxCoeff();
  if (!std::isfinite(max_abs) || max_abs > kBlowUpThreshold) {
    throw BlowUpError(time(), max_abs);
  }
  y_prev_.swap(y_);
  f_prev_.swap(f_);
  y_ = std::move(next);
  f_ = cubic_reaction(y_, params);
  has_prev_ = true;
}

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  if (stride < 1) throw std::invalid_argument("storage stride must be >= 1");
  if (!(beta >= 0.0)) throw std::invalid_argument("cost weight beta must be nonnegative");
}

const Vector& TrajectoryRecord::state_at_step(long step) const {
  const long rel = step - first_step;
  if (rel < 0 || rel % state_stride != 0) {
    // The final state may sit off-stride.
    if (!state_steps.empty() && state_steps.back() == step) return states.back();
    throw std::out_of_range("TrajectoryRecord: state at step " + std::to_string(step) + " not stored");
  }
  const auto idx = static_cast<std::size_t>(rel / state_stride);
  if (idx >= states.size() || state_steps[idx] != step) {
    if (!state_steps.empty() && state_steps.back() == step) return states.back();
    throw std::out_of_range("TrajectoryRecord: state at step " + std::to_string(step) + " not stored");
  }
  return states[idx];
}

long steps_for(double horizon, double dt) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const double ratio = horizon / dt;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("horizon " + std::to_string(horizon) + " is not a multiple of the time step " +
                                std::to_string(dt));
  }
  return n;
}

TrajectoryRecord simulate_free(const NodalField& y0, double horizon, std::shared_ptr<const CnabOperator> op,
                               const ForcingSpec& forcing, const IntegratorConfig& cfg) {
  cfg.validate();
  if (std::abs(cfg.dt - op->dt()) > 1e-15 * cfg.dt) {
    throw std::invalid_argument("simulate_free: integrator step differs from the factorized operator");
  }
  const long n_steps = steps_for(horizon, op->dt());
  const auto& mass = op->model().mass;
  ForcingLoad load(forcing, op->model_ptr());
  CnabIntegrator integ(op);
  integ.reset(y0, 0);

  TrajectoryRecord rec;
  rec.dt = op->dt();
  rec.state_stride = cfg.stride;
  rec.controls.resize(0, n_steps);
  const auto sample = [&]() {
    const double norm = l2_norm(integ.state(), mass);
    rec.times.push_back(integ.time());
    rec.state_norm.push_back(norm);
    const long s = integ.step();
    if (s % cfg.stride == 0 || s == n_steps) {
      rec.state_steps.push_back(s);
      rec.states.push_back(integ.state());
    }
  };
  sample();
  for (long n = 0; n < n_steps; ++n) {
    integ.advance(load.at(integ.time()));
    sample();
  }
  return rec;
}

}  // namespace schloegl
