#include "schloegl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace schloegl {

namespace fs = std::filesystem;

ScenarioSetup build_setup(const ScenarioConfig& cfg) {
  const RectangleDomain domain(cfg.lx, cfg.ly);
  const StructuredTriangulation mesh = build_mesh(cfg.nx, cfg.ny, domain);
  ScenarioSetup s;
  s.model = Model::create(mesh, cfg.params);
  s.grid = std::make_shared<const ActuatorGrid>(cfg.actuator_grid(), cfg.r, domain);
  s.system.op = std::make_shared<const CnabOperator>(s.model, cfg.dt);
  s.system.coupling = std::make_shared<const CouplingMatrix>(discretize_actuators(*s.grid, s.model->mesh));
  if (cfg.forcing == ForcingKind::Periodic) {
    s.system.forcing = PeriodicIndicatorForcing{};
  } else {
    s.system.forcing = ZeroForcing{};
  }
  s.y0 = interpolate(s.model->mesh, cfg.state);
  s.yhat0 = interpolate(s.model->mesh, cfg.target);
  return s;
}

std::shared_ptr<const TargetTrajectory> compute_target(const ScenarioSetup& setup, double horizon) {
  IntegratorConfig cfg{setup.system.op->dt(), 1, 0.0};
  return std::make_shared<const TargetTrajectory>(
      simulate_free(setup.yhat0, horizon, setup.system.op, setup.system.forcing, cfg));
}

double required_target_horizon(const ScenarioConfig& cfg) {
  if (cfg.controller == ControllerKind::Rhc) return rhc_target_horizon(cfg.rhc_config());
  return cfg.t_inf;
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Stable:
      return "stable";
    case RunStatus::CompletedUnstable:
      return "completed-unstable";
    case RunStatus::BlowUp:
      return "blow-up";
    case RunStatus::Crashed:
      return "crashed";
  }
  return "";
}

namespace {

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

TheoryConstants theory_for(const ScenarioConfig& cfg, const ActuatorGrid& grid) {
  return compute_theory_constants(cfg.mu, cfg.params, cfg.lx * cfg.ly, cfg.lambda, grid);
}

}  // namespace

RunSummary summarize_record(const TrajectoryRecord& rec, const ScenarioConfig& cfg, const TheoryConstants& theory) {
  RunSummary s;
  s.theory = theory;
  s.initial_error = rec.error_norm.front();
  s.final_error = rec.error_norm.back();
  s.final_time = rec.final_time();
  s.j_total = rec.running_cost.back();
  double control_energy = 0.0;
  for (double u : rec.control_norm) control_energy += u * u;
  s.j_control = cfg.beta * rec.dt * control_energy;
  s.j_state = s.j_total - s.j_control;
  for (std::size_t i = 0; i < rec.error_norm.size(); ++i) {
    if (rec.error_norm[i] <= theory.d) {
      s.entry_time = rec.times[i];
      break;
    }
  }
  try {
    s.decay = fit_decay_rate(rec.times, rec.error_norm);
  } catch (const std::invalid_argument&) {
    s.decay.reset();
  }
  const bool reduced = s.final_error <= 1e-3 * s.initial_error;
  s.status = (s.initial_error == 0.0 || reduced) ? RunStatus::Stable : RunStatus::CompletedUnstable;
  return s;
}

void write_series_csv(const fs::path& path, const TrajectoryRecord& rec, int stride) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t,err_l2,log_err_l2,u_norm,J_running\n";
  const std::size_t n = rec.times.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i % static_cast<std::size_t>(stride) != 0 && i + 1 != n) continue;
    double u = 0.0;
    if (!rec.control_norm.empty()) u = rec.control_norm[std::min(i, rec.control_norm.size() - 1)];
    const double e = rec.error_norm[i];
    out << fmt17(rec.times[i]) << ',' << fmt17(e) << ',' << fmt17(std::log(e)) << ',' << fmt17(u) << ','
        << fmt17(rec.running_cost[i]) << '\n';
  }
}

namespace {

void write_target_csv(const fs::path& path, const TargetTrajectory& target, long n_steps, int stride) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t,target_l2\n";
  for (long i = 0; i <= n_steps; ++i) {
    if (i % stride != 0 && i != n_steps) continue;
    out << fmt17(target.times[static_cast<std::size_t>(i)]) << ','
        << fmt17(target.state_norm[static_cast<std::size_t>(i)]) << '\n';
  }
}

void write_states_csv(const fs::path& path, const TrajectoryRecord& rec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < rec.states.size(); ++i) {
    out << fmt17(static_cast<double>(rec.state_steps[i]) * rec.dt);
    for (Eigen::Index j = 0; j < rec.states[i].size(); ++j) out << ',' << fmt17(rec.states[i](j));
    out << '\n';
  }
}

}  // namespace

void write_summary(const fs::path& path, const RunSummary& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "status = " << to_string(s.status) << '\n';
  if (!s.message.empty()) out << "message = " << s.message << '\n';
  out << "initial_error = " << fmt17(s.initial_error) << '\n';
  out << "final_error = " << fmt17(s.final_error) << '\n';
  out << "final_time = " << fmt17(s.final_time) << '\n';
  if (s.decay) {
    out << "mu_est = " << fmt17(s.decay->mu) << '\n';
    out << "fit_window = " << fmt17(s.decay->t_begin) << ", " << fmt17(s.decay->t_end) << '\n';
    out << "fit_residual = " << fmt17(s.decay->residual) << '\n';
    out << "fit_decay_window = " << (s.decay->decay_window ? "true" : "false") << '\n';
  } else {
    out << "mu_est = nan\n";
  }
  out << "J_total = " << fmt17(s.j_total) << '\n';
  out << "J_state = " << fmt17(s.j_state) << '\n';
  out << "J_control = " << fmt17(s.j_control) << '\n';
  out << "theory_D = " << fmt17(s.theory.d) << '\n';
  out << "theory_time_to_ball = " << fmt17(s.theory.time_to_ball) << '\n';
  out << "observed_entry_time = " << (s.entry_time ? fmt17(*s.entry_time) : std::string("none")) << '\n';
  if (s.rhc_windows > 0) {
    out << "rhc_windows = " << s.rhc_windows << '\n';
    out << "rhc_iterations_total = " << s.rhc_iterations << '\n';
    out << "rhc_iterations_max = " << s.rhc_iterations_max << '\n';
    out << "rhc_unconverged_windows = " << s.rhc_unconverged << '\n';
  }
  out << "wall_time_s = " << std::fixed << std::setprecision(3) << s.wall_seconds << '\n';
}

RunArtifact run_scenario(const ScenarioConfig& cfg, const std::string& config_text, const fs::path& out_dir,
                         std::shared_ptr<const TargetTrajectory> target) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  RunArtifact art;
  art.dir = out_dir;
  const ScenarioSetup setup = build_setup(cfg);
  const TheoryConstants theory = theory_for(cfg, *setup.grid);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream snap(out_dir / "config.ini");
    snap << config_snapshot(config_text, cfg);
    art.files.push_back(out_dir / "config.ini");
  }

  try {
    if (!target) target = compute_target(setup, required_target_horizon(cfg));
    const IntegratorConfig icfg{cfg.dt, cfg.stride, cfg.beta};
    const long n_steps = steps_for(cfg.t_inf, cfg.dt);
    RhcResult rhc;
    switch (cfg.controller) {
      case ControllerKind::None: {
        const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(setup.system.coupling->n_actuators(), n_steps);
        art.record = open_loop_simulate(setup.y0, *target, zero, setup.system, icfg, cfg.norm);
        break;
      }
      case ControllerKind::Saturated: {
        const FeedbackLaw law{cfg.lambda, cfg.saturation()};
        art.record = closed_loop_simulate(setup.y0, *target, law, setup.system, icfg, cfg.t_inf);
        break;
      }
      case ControllerKind::Rhc: {
        rhc = run_rhc(cfg.rhc_config(), setup.y0, target, setup.system, cfg.stride);
        art.record = std::move(rhc.plant);
        break;
      }
    }
    art.summary = summarize_record(art.record, cfg, theory);
    if (cfg.controller == ControllerKind::Rhc) {
      art.summary.rhc_windows = static_cast<int>(rhc.windows.size());
      for (const auto& w : rhc.windows) {
        art.summary.rhc_iterations += w.iterations;
        art.summary.rhc_iterations_max = std::max(art.summary.rhc_iterations_max, w.iterations);
        art.summary.rhc_unconverged += w.converged ? 0 : 1;
      }
    }
    if (!out_dir.empty()) {
      write_series_csv(out_dir / "series.csv", art.record, cfg.stride);
      write_target_csv(out_dir / "target.csv", *target, n_steps, cfg.stride);
      art.files.push_back(out_dir / "series.csv");
      art.files.push_back(out_dir / "target.csv");
      if (cfg.write_states) {
        write_states_csv(out_dir / "states.csv", art.record);
        art.files.push_back(out_dir / "states.csv");
      }
    }
  } catch (const BlowUpError& e) {
    art.summary.status = RunStatus::BlowUp;
    art.summary.message = e.what();
    art.summary.final_time = e.time();
    art.summary.initial_error = l2_norm(setup.y0 - setup.yhat0, setup.model->mass);
    art.summary.final_error = std::numeric_limits<double>::infinity();
    art.summary.j_total = std::numeric_limits<double>::infinity();
    art.summary.theory = theory;
  } catch (const std::runtime_error& e) {
    art.summary.status = RunStatus::Crashed;
    art.summary.message = e.what();
    art.summary.theory = theory;
  }
  art.summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out_dir.empty()) {
    write_summary(out_dir / "summary.txt", art.summary);
    art.files.push_back(out_dir / "summary.txt");
  }
  return art;
}

void parallel_for(int n, int threads, const std::function<void(int)>& job) {
  if (n <= 0) return;
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) job(i);
    });
  }
  for (auto& t : pool) t.join();
}

namespace {

std::string cell_label(const Table1Cell& c) {
  std::ostringstream os;
  os << "(" << c.cu_text << ", " << c.t_inf << ")";
  return os.str();
}

std::string run_label(const std::string& kind, const Table1Cell& c, double beta) {
  std::ostringstream os;
  os << kind << "_cu" << c.cu_text << "_T" << c.t_inf;
  if (kind == "rhc") os << "_beta" << beta;
  std::string s = os.str();
  std::replace(s.begin(), s.end(), '^', '-');
  return s;
}

std::string format_table(const std::vector<Table1Cell>& cells, const std::vector<double>& betas,
                         const std::vector<Table1Entry>& entries, double lambda) {
  std::ostringstream os;
  const int w0 = 22;
  const int w = 14;
  os << std::left << std::setw(w0) << "control \\ (C_u, T_inf)";
  for (const auto& c : cells) os << std::right << std::setw(w) << cell_label(c);
  os << '\n';
  for (double beta : betas) {
    std::ostringstream rhc_name;
    rhc_name << "RHC beta=" << beta;
    std::ostringstream sat_name;
    sat_name << "SatCon lambda=" << lambda;
    for (int row = 0; row < 2; ++row) {
      os << std::left << std::setw(w0) << (row == 0 ? rhc_name.str() : sat_name.str());
      for (const auto& c : cells) {
        const auto it = std::find_if(entries.begin(), entries.end(), [&](const Table1Entry& e) {
          return e.beta == beta && e.cell.cu_text == c.cu_text && e.cell.t_inf == c.t_inf;
        });
        std::ostringstream v;
        const bool ok = it != entries.end() && (row == 0 ? it->rhc_ok : it->satcon_ok);
        if (ok) {
          v << std::setprecision(5) << (row == 0 ? it->rhc : it->satcon);
        } else {
          v << "failed";
        }
        os << std::right << std::setw(w) << v.str();
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace

Table1Report run_table1(const ScenarioConfig& base, const fs::path& out_dir, int threads,
                        std::shared_ptr<const TargetTrajectory> target) {
  const std::vector<Table1Cell> cells = base.table1_cells.empty() ? default_table1_cells() : base.table1_cells;
  const std::vector<double>& betas = base.table1_betas;
  if (!target) {
    double horizon = 0.0;
    for (const auto& c : cells) {
      ScenarioConfig probe = base;
      probe.t_inf = c.t_inf;
      probe.controller = ControllerKind::Rhc;
      probe.has_rhc_block = true;
      horizon = std::max(horizon, required_target_horizon(probe));
    }
    target = compute_target(build_setup(base), horizon);
  }
  if (!out_dir.empty()) fs::create_directories(out_dir);

  struct Job {
    ControllerKind kind;
    std::size_t cell;
    double beta;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (double beta : betas) jobs.push_back({ControllerKind::Rhc, c, beta});
    jobs.push_back({ControllerKind::Saturated, c, 0.0});
  }
  std::stable_sort(jobs.begin(), jobs.end(), [&](const Job& a, const Job& b) {
    const double wa = cells[a.cell].t_inf * (a.kind == ControllerKind::Rhc ? 100.0 : 1.0);
    const double wb = cells[b.cell].t_inf * (b.kind == ControllerKind::Rhc ? 100.0 : 1.0);
    return wa > wb;
  });

  std::vector<RunArtifact> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), threads, [&](int i) {
    const Job& job = jobs[static_cast<std::size_t>(i)];
    ScenarioConfig cfg = base;
    cfg.cu = cells[job.cell].cu;
    cfg.t_inf = cells[job.cell].t_inf;
    cfg.controller = job.kind;
    cfg.has_rhc_block = true;
    cfg.beta = job.beta;
    const std::string label = run_label(job.kind == ControllerKind::Rhc ? "rhc" : "satcon", cells[job.cell], job.beta);
    try {
      results[static_cast<std::size_t>(i)] =
          run_scenario(cfg, "", out_dir.empty() ? fs::path() : out_dir / label, target);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  });

  Table1Report report;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (double beta : betas) {
      Table1Entry entry;
      entry.cell = cells[c];
      entry.beta = beta;
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].cell != c) continue;
        const RunArtifact& art = results[i];
        const bool finished = errors[i].empty() && (art.summary.status == RunStatus::Stable ||
                                                    art.summary.status == RunStatus::CompletedUnstable);
        if (!finished) {
          entry.error += errors[i].empty() ? art.summary.message : errors[i];
          continue;
        }
        if (jobs[i].kind == ControllerKind::Rhc && jobs[i].beta == beta) {
          entry.rhc = art.summary.j_total;
          entry.rhc_ok = true;
        } else if (jobs[i].kind == ControllerKind::Saturated) {
          double energy = 0.0;
          for (double u : art.record.control_norm) energy += u * u;
          entry.satcon = art.summary.j_state + beta * art.record.dt * energy;
          entry.satcon_ok = true;
        }
      }
      report.entries.push_back(std::move(entry));
    }
  }
  report.text = format_table(cells, betas, report.entries, base.lambda);
  if (!out_dir.empty()) {
    std::ofstream txt(out_dir / "table1.txt");
    txt << report.text;
    std::ofstream csv(out_dir / "table1.csv");
    csv << "cu,t_inf,beta,J_rhc,J_satcon,rhc_ok,satcon_ok\n";
    for (const auto& e : report.entries) {
      csv << e.cell.cu_text << ',' << fmt17(e.cell.t_inf) << ',' << fmt17(e.beta) << ',' << fmt17(e.rhc) << ','
          << fmt17(e.satcon) << ',' << (e.rhc_ok ? 1 : 0) << ',' << (e.satcon_ok ? 1 : 0) << '\n';
    }
  }
  return report;
}

std::vector<SweepEntry> run_sweep(const std::string& axis, const std::vector<double>& values,
                                  const ScenarioConfig& base, const fs::path& out_dir, int threads) {
  if (values.empty()) throw std::invalid_argument("sweep: empty value list");
  if (axis != "cu" && axis != "lambda" && axis != "msigma") {
    throw std::invalid_argument("sweep: unknown axis '" + axis + "'");
  }
  std::vector<ScenarioConfig> cfgs;
  for (double v : values) {
    ScenarioConfig cfg = base;
    if (cfg.controller == ControllerKind::None) cfg.controller = ControllerKind::Saturated;
    if (axis == "cu") {
      cfg.cu = v;
    } else if (axis == "lambda") {
      cfg.lambda = v;
    } else {
      cfg.msigma = static_cast<int>(std::lround(v));
    }
    cfg.validate();
    cfgs.push_back(cfg);
  }
  const auto target = compute_target(build_setup(cfgs.front()), required_target_horizon(cfgs.front()));
  if (!out_dir.empty()) fs::create_directories(out_dir);

  std::vector<SweepEntry> out(values.size());
  parallel_for(static_cast<int>(values.size()), threads, [&](int i) {
    const auto idx = static_cast<std::size_t>(i);
    std::ostringstream label;
    label << axis << "_" << values[idx];
    out[idx].value = values[idx];
    out[idx].summary =
        run_scenario(cfgs[idx], "", out_dir.empty() ? fs::path() : out_dir / label.str(), target).summary;
  });
  if (!out_dir.empty()) {
    std::ofstream csv(out_dir / "sweep.csv");
    csv << axis << ",mu_est,final_error,status\n";
    for (const auto& e : out) {
      csv << fmt17(e.value) << ',' << (e.summary.decay ? fmt17(e.summary.decay->mu) : std::string("nan")) << ','
          << fmt17(e.summary.final_error) << ',' << to_string(e.summary.status) << '\n';
    }
  }
  return out;
}

}  // namespace schloegl
