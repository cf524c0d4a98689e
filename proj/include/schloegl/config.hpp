// Scenario configuration: a flat INI-style text format.
//
//   # comment
//   [section]
//   key = value
//
// Sections may be repeated; a later assignment overrides an earlier one.
// Numbers accept plain decimals, "inf", and "e^x" for exp(x). Unknown
// sections or keys, malformed values and out-of-range values raise
// ConfigError carrying the offending line number.
#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "schloegl/actuators.hpp"
#include "schloegl/rhc.hpp"

namespace schloegl {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message);
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_;
};

/// Spatial profile of an initial state.
struct InitialProfile {
  enum class Kind { Constant, Bilinear, Linear };
  Kind kind = Kind::Constant;
  double value = 0.0;

  /// Constant c, 10 - 20 x1 x2, or -10 x1 + x2.
  [[nodiscard]] double operator()(const Point& x) const;
  [[nodiscard]] std::string to_string() const;
};

InitialProfile parse_initial_profile(const std::string& text);

enum class ControllerKind { None, Saturated, Rhc };
enum class ForcingKind { Zero, Periodic };

const char* to_string(ControllerKind kind);
const char* to_string(ForcingKind kind);

struct Table1Cell {
  double cu = 0.0;
  double t_inf = 0.0;
  std::string cu_text;
};

struct ScenarioConfig {
  double lx = 1.0;
  double ly = 1.0;
  int nx = 57;
  int ny = 57;
  SchloeglParams params;
  int msigma = 9;
  double r = 0.5;
  NormKind norm = NormKind::Euclidean;
  double lambda = 175.0;
  double cu = std::numeric_limits<double>::infinity();
  ForcingKind forcing = ForcingKind::Zero;
  InitialProfile target{InitialProfile::Kind::Constant, 0.0};
  InitialProfile state{InitialProfile::Kind::Constant, 2.0};
  double dt = 1e-3;
  double t_inf = 5.0;
  int stride = 10;
  ControllerKind controller = ControllerKind::None;

  bool has_rhc_block = false;
  double rhc_horizon = 1.25;
  double rhc_delta = 0.5;
  double beta = 1e-3;
  double rhc_tol = 1e-4;
  int rhc_max_iterations = 500;
  WarmStart warm_start = WarmStart::Shift;

  /// Rate used for the theory constants.
  double mu = 0.1;

  std::vector<Table1Cell> table1_cells;
  std::vector<double> table1_betas{1e-3, 1e-5};

  std::string sweep_axis;
  std::vector<double> sweep_values;

  bool write_states = false;
  std::uint64_t seed = 0;

  /// "config:<line>" for values read from the text, "default" otherwise.
  std::map<std::string, std::string> provenance;

  [[nodiscard]] int actuator_grid() const;
  [[nodiscard]] SaturationConfig saturation() const { return {cu, norm}; }
  [[nodiscard]] RhcConfig rhc_config() const;
  void validate() const;
};

/// Table 1 cells used when the config does not list any.
std::vector<Table1Cell> default_table1_cells();

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Coarse mesh used for quick runs.
void apply_ci_preset(ScenarioConfig& cfg);

/// Input text followed by a block listing every value that was defaulted.
std::string config_snapshot(const std::string& input_text, const ScenarioConfig& cfg);

/// Parses "e^x", "inf", "+inf" or a plain decimal.
double parse_number(const std::string& text);
std::string format_number(double v);

}  // namespace schloegl
