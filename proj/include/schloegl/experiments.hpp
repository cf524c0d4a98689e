// Scenario orchestration: builds the discrete system from a config, runs the
// target and the controlled plant, and writes CSV series and summaries.
#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "schloegl/analysis.hpp"
#include "schloegl/config.hpp"
#include "schloegl/rhc.hpp"

namespace schloegl {

struct ScenarioSetup {
  std::shared_ptr<const Model> model;
  std::shared_ptr<const ActuatorGrid> grid;
  ControlledSystem system;
  NodalField y0;
  NodalField yhat0;
};

ScenarioSetup build_setup(const ScenarioConfig& cfg);

/// Free dynamics from yhat0 with every step stored.
std::shared_ptr<const TargetTrajectory> compute_target(const ScenarioSetup& setup, double horizon);

/// Target horizon a scenario needs: T_inf, or T_inf - delta + T for receding horizon.
double required_target_horizon(const ScenarioConfig& cfg);

/// Stable means the final error is at most 1e-3 times the initial error.
enum class RunStatus { Stable, CompletedUnstable, BlowUp, Crashed };

const char* to_string(RunStatus status);

struct RunSummary {
  RunStatus status = RunStatus::Stable;
  std::string message;
  double initial_error = 0.0;
  double final_error = 0.0;
  double final_time = 0.0;
  std::optional<DecayFit> decay;
  double j_total = 0.0;
  double j_state = 0.0;
  double j_control = 0.0;
  /// First sample time with ||z|| <= D (theory radius at the configured mu).
  std::optional<double> entry_time;
  TheoryConstants theory;
  int rhc_windows = 0;
  long rhc_iterations = 0;
  int rhc_iterations_max = 0;
  int rhc_unconverged = 0;
  double wall_seconds = 0.0;
};

struct RunArtifact {
  std::filesystem::path dir;
  std::vector<std::filesystem::path> files;
  RunSummary summary;
  TrajectoryRecord record;
};

/// Runs the configured controller and, when `out_dir` is nonempty, writes
/// config.ini, series.csv, target.csv and summary.txt there. A target may be
/// supplied to share it across runs.
RunArtifact run_scenario(const ScenarioConfig& cfg, const std::string& config_text,
                         const std::filesystem::path& out_dir,
                         std::shared_ptr<const TargetTrajectory> target = nullptr);

/// Control-free diagnostics: J pieces and decay fit from a record.
RunSummary summarize_record(const TrajectoryRecord& rec, const ScenarioConfig& cfg, const TheoryConstants& theory);

/// Writes t, err_l2, log_err_l2, u_norm, J_running with 17 significant digits.
void write_series_csv(const std::filesystem::path& path, const TrajectoryRecord& rec, int stride);
void write_summary(const std::filesystem::path& path, const RunSummary& s);

struct Table1Entry {
  Table1Cell cell;
  double beta = 0.0;
  double rhc = 0.0;
  double satcon = 0.0;
  bool rhc_ok = false;
  bool satcon_ok = false;
  std::string error;
  RhcResult rhc_detail;
};

struct Table1Report {
  std::vector<Table1Entry> entries;
  std::string text;
};

/// Runs every (cell, beta) pair: saturated feedback at the configured lambda
/// and receding horizon control. The saturated run is shared between betas.
Table1Report run_table1(const ScenarioConfig& base, const std::filesystem::path& out_dir, int threads,
                        std::shared_ptr<const TargetTrajectory> target = nullptr);

struct SweepEntry {
  double value = 0.0;
  RunSummary summary;
};

/// One saturated-feedback run per value of `axis` (cu, lambda or msigma).
std::vector<SweepEntry> run_sweep(const std::string& axis, const std::vector<double>& values,
                                  const ScenarioConfig& base, const std::filesystem::path& out_dir, int threads);

/// Runs jobs 0..n-1 on up to `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& job);

}  // namespace schloegl
