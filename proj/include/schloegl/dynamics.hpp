// Semi-discrete Schloegl system and its Crank-Nicolson / Adams-Bashforth
// time integrator.
//
//   M dy/dt + K y + M f(y) = M h(t) + B u(t),   f(w) = (w - z1)(w - z2)(w - z3)
//
// Diffusion is treated by Crank-Nicolson, the reaction by second-order
// Adams-Bashforth, and forcing/control explicitly at t^n:
//
//   (M/k + K/2) y^{n+1} = (M/k - K/2) y^n - M (3/2 f(y^n) - 1/2 f(y^{n-1})) + M h^n + B u^n
//
// The first step (no y^{-1} available) uses explicit Euler for the reaction,
// keeping the same left-hand operator. Steps are taken in increment form,
//
//   (M/k + K/2) (y^{n+1} - y^n) = -K y^n - M (...) + M h^n + B u^n,
//
// so constant roots of f are exact fixed points.
#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "schloegl/actuators.hpp"
#include "schloegl/fem.hpp"

namespace schloegl {

struct SchloeglParams {
  double nu = 0.1;
  std::array<double, 3> zeta{-1.0, 0.0, 2.0};

  /// xi_2 = z1 + z2 + z3.
  [[nodiscard]] double xi2() const { return zeta[0] + zeta[1] + zeta[2]; }
  /// xi_1 = -(z1 z2 + z1 z3 + z2 z3).
  [[nodiscard]] double xi1() const { return -(zeta[0] * zeta[1] + zeta[0] * zeta[2] + zeta[1] * zeta[2]); }
  /// xi_0 = z1 z2 z3.
  [[nodiscard]] double xi0() const { return zeta[0] * zeta[1] * zeta[2]; }
  [[nodiscard]] double zeta_max_abs() const;

  void validate() const;
};

/// f(w) = (w - z1)(w - z2)(w - z3), product form.
double cubic_reaction(double w, const SchloeglParams& params);
Vector cubic_reaction(const Vector& w, const SchloeglParams& params);
double cubic_reaction_derivative(double w, const SchloeglParams& params);
Vector cubic_reaction_derivative(const Vector& w, const SchloeglParams& params);

/// f^yhat(z) = f(z + yhat) - f(yhat), written as a polynomial in z:
///   z^3 + (3 yhat - xi2) z^2 + (3 yhat^2 - 2 xi2 yhat - xi1) z.
Vector shifted_reaction(const Vector& z, const Vector& yhat, const SchloeglParams& params);
/// d/dz f^yhat(z) = 3 z^2 + 2 (3 yhat - xi2) z + (3 yhat^2 - 2 xi2 yhat - xi1).
Vector shifted_reaction_derivative(const Vector& z, const Vector& yhat, const SchloeglParams& params);

struct ZeroForcing {};

/// h(t, x) = 1/2 * 1{|sin 6t| > 1/2}(t) * 1{|x|^2 < 1/2}(x).
struct PeriodicIndicatorForcing {};

struct CustomForcing {
  std::function<double(double, const Point&)> fn;
};

using ForcingSpec = std::variant<ZeroForcing, PeriodicIndicatorForcing, CustomForcing>;

/// Nodal interpolant of h(t, .).
NodalField eval_forcing(const ForcingSpec& spec, double t, const StructuredTriangulation& mesh);

/// Mesh, operators and reaction parameters; immutable once built.
struct Model {
  StructuredTriangulation mesh;
  SparseSymOperator mass;
  SparseSymOperator stiffness;
  SchloeglParams params;

  static std::shared_ptr<const Model> create(const StructuredTriangulation& mesh, const SchloeglParams& params);
};

/// Factorized CN/AB2 operators for one step size.
class CnabOperator {
 public:
  CnabOperator(std::shared_ptr<const Model> model, double dt);

  [[nodiscard]] const Model& model() const { return *model_; }
  [[nodiscard]] std::shared_ptr<const Model> model_ptr() const { return model_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] int n_nodes() const { return model_->mesh.n_nodes(); }
  /// M/k - K/2.
  [[nodiscard]] const SparseSymOperator& explicit_part() const { return explicit_; }
  /// Solves (M/k + K/2) x = rhs.
  [[nodiscard]] Vector solve(const Vector& rhs) const;

 private:
  std::shared_ptr<const Model> model_;
  double dt_;
  SparseSymOperator explicit_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor_;
};

/// M h(t), cached for the piecewise-constant forcing variants.
class ForcingLoad {
 public:
  ForcingLoad(ForcingSpec spec, std::shared_ptr<const Model> model);

  /// Returns M h(t); the reference stays valid until the next call.
  const Vector& at(double t);
  [[nodiscard]] bool is_zero() const { return std::holds_alternative<ZeroForcing>(spec_); }
  [[nodiscard]] const ForcingSpec& spec() const { return spec_; }

 private:
  ForcingSpec spec_;
  std::shared_ptr<const Model> model_;
  Vector zero_;
  Vector active_;
  Vector scratch_;
};

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(double time, double max_abs);
  [[nodiscard]] double time() const { return time_; }

 private:
  double time_;
};

inline constexpr double kBlowUpThreshold = 1e8;

/// Reaction weights (a, b) for the step leaving level n: y^{n+1} uses a f(y^n) - b f(y^{n-1}).
struct ReactionWeights {
  double current;
  double previous;
};

/// One CN/AB2 step. `y_prev` may be null for the Euler start-up step.
/// `load` collects M h^n + B u^n.
Vector step_cnab(const CnabOperator& op, const Vector& y, const Vector* y_prev, const Vector& load);

/// Stateful stepper shared by every simulation path, so free runs, closed
/// loops and optimal-control windows produce identical arithmetic.
class CnabIntegrator {
 public:
  explicit CnabIntegrator(std::shared_ptr<const CnabOperator> op);

  /// Starts at step index `step` (time step * dt) without history.
  void reset(const Vector& y0, long step = 0);
  /// Starts at step index `step` with the previous level available.
  void reset(const Vector& y0, const Vector& y_prev, long step);

  /// Advances one step with additional explicit load (M h^n + B u^n). Throws BlowUpError.
  void advance(const Vector& load);

  [[nodiscard]] const Vector& state() const { return y_; }
  [[nodiscard]] const Vector& previous_state() const { return y_prev_; }
  [[nodiscard]] bool has_history() const { return has_prev_; }
  [[nodiscard]] long step() const { return step_; }
  [[nodiscard]] double time() const { return static_cast<double>(step_) * op_->dt(); }
  [[nodiscard]] const CnabOperator& op() const { return *op_; }
  /// Weights the next advance() will use.
  [[nodiscard]] ReactionWeights next_weights() const;

 private:
  std::shared_ptr<const CnabOperator> op_;
  Vector y_;
  Vector y_prev_;
  Vector f_;
  Vector f_prev_;
  Vector rhs_;
  bool has_prev_ = false;
  long step_ = 0;
};

struct IntegratorConfig {
  double dt = 1e-3;
  /// States are stored every `stride` steps (and at the final step).
  int stride = 10;
  /// Weight of the control term in the running cost.
  double beta = 0.0;

  void validate() const;
};

/// Time-indexed record of a simulation. Scalar series have one entry per
/// time node t_n = n dt; controls have one column per step (active on
/// [t_n, t_{n+1})).
struct TrajectoryRecord {
  double dt = 0.0;
  long first_step = 0;
  std::vector<double> times;
  std::vector<double> state_norm;
  std::vector<double> error_norm;
  /// Euclidean norm of u^n, as it enters the cost.
  std::vector<double> control_norm;
  /// Norm of u^n in the constraint norm.
  std::vector<double> constraint_norm;
  /// J(t_n): trapezoid in time of ||y - yhat||^2 plus beta * k * sum |u^m|^2, m < n.
  std::vector<double> running_cost;
  Eigen::MatrixXd controls;
  int state_stride = 1;
  std::vector<long> state_steps;
  std::vector<Vector> states;

  [[nodiscard]] long n_steps() const { return static_cast<long>(times.size()) - 1; }
  [[nodiscard]] double final_time() const { return times.back(); }
  /// State at absolute step index; requires it to be stored.
  [[nodiscard]] const Vector& state_at_step(long step) const;
  [[nodiscard]] bool has_every_state() const { return state_stride == 1; }
};

/// Uncontrolled run y(t) = S(y0; t) over [0, horizon].
TrajectoryRecord simulate_free(const NodalField& y0, double horizon, std::shared_ptr<const CnabOperator> op,
                               const ForcingSpec& forcing, const IntegratorConfig& cfg);

/// Number of steps of size dt covering `horizon`; rejects horizons that are not a multiple of dt.
long steps_for(double horizon, double dt);

}  // namespace schloegl
