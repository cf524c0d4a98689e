// Command-line front end for the Schloegl stabilization experiments.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "schloegl/analysis.hpp"
#include "schloegl/config.hpp"
#include "schloegl/experiments.hpp"

namespace fs = std::filesystem;
using namespace schloegl;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config;
  std::string out;
  int threads = 1;
  bool ci = false;
};

void add_common(CLI::App* sub, Common& c, bool needs_config) {
  auto* opt = sub->add_option("--config", c.config, "scenario config file");
  if (needs_config) opt->required();
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--threads", c.threads, "worker threads for batches")->check(CLI::PositiveNumber);
  sub->add_flag("--ci", c.ci, "coarse 16x16 mesh preset");
}

std::string read_text(const std::string& path) {
  if (path.empty()) return "";
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig load(const Common& c, std::string& text) {
  text = read_text(c.config);
  ScenarioConfig cfg = parse_config(text);
  if (c.ci) apply_ci_preset(cfg);
  return cfg;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v == 0.0 ? 0.0 : v);
  return buf;
}

int run_single(const Common& c, ControllerKind kind) {
  std::string text;
  ScenarioConfig cfg = load(c, text);
  cfg.controller = kind;
  if (kind == ControllerKind::Rhc) cfg.has_rhc_block = true;
  cfg.validate();
  const fs::path out = c.out.empty() ? fs::path("out") : fs::path(c.out);
  const RunArtifact art = run_scenario(cfg, text, out);
  std::cout << "status = " << to_string(art.summary.status) << '\n'
            << "final_error = " << num(art.summary.final_error) << '\n'
            << "J_total = " << num(art.summary.j_total) << '\n';
  if (art.summary.decay) std::cout << "mu_est = " << num(art.summary.decay->mu) << '\n';
  std::cout << "output = " << out.string() << '\n';
  if (!art.summary.message.empty()) std::cerr << art.summary.message << '\n';
  const bool failed = art.summary.status == RunStatus::BlowUp || art.summary.status == RunStatus::Crashed;
  return failed ? kExitNumerical : 0;
}

int run_table(const Common& c) {
  std::string text;
  const ScenarioConfig cfg = load(c, text);
  const fs::path out = c.out.empty() ? fs::path("out/table1") : fs::path(c.out);
  const Table1Report rep = run_table1(cfg, out, c.threads);
  std::cout << rep.text;
  bool all_ok = true;
  for (const auto& e : rep.entries) {
    all_ok = all_ok && e.rhc_ok && e.satcon_ok;
    if (!e.error.empty()) std::cerr << "cell " << e.cell.cu_text << "/" << e.cell.t_inf << ": " << e.error << '\n';
  }
  return all_ok ? 0 : kExitNumerical;
}

int run_sweep_cmd(const Common& c, std::string axis, const std::vector<std::string>& value_text) {
  std::vector<double> values;
  for (const auto& v : value_text) {
    try {
      values.push_back(parse_number(v));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(0, std::string("--values: ") + e.what());
    }
  }
  std::string text;
  const ScenarioConfig cfg = load(c, text);
  if (axis.empty()) axis = cfg.sweep_axis.empty() ? "lambda" : cfg.sweep_axis;
  if (values.empty()) values = cfg.sweep_values;
  if (values.empty()) throw ConfigError(0, "sweep needs values (config [sweep] values or --values)");
  const fs::path out = c.out.empty() ? fs::path("out/sweep") : fs::path(c.out);
  const auto entries = run_sweep(axis, values, cfg, out, c.threads);
  std::cout << axis << "  mu_est  final_error  status\n";
  bool failed = false;
  for (const auto& e : entries) {
    std::cout << num(e.value) << "  " << (e.summary.decay ? num(e.summary.decay->mu) : "nan") << "  "
              << num(e.summary.final_error) << "  " << to_string(e.summary.status) << '\n';
    failed = failed || e.summary.status == RunStatus::BlowUp || e.summary.status == RunStatus::Crashed;
  }
  return failed ? kExitNumerical : 0;
}

int run_constants(const Common& c, std::optional<double> mu_override) {
  std::string text;
  ScenarioConfig cfg = load(c, text);
  if (mu_override) cfg.mu = *mu_override;
  const ActuatorGrid grid(cfg.actuator_grid(), cfg.r, RectangleDomain(cfg.lx, cfg.ly));
  const TheoryConstants t = compute_theory_constants(cfg.mu, cfg.params, cfg.lx * cfg.ly, cfg.lambda, grid);
  std::cout << "mu = " << num(t.mu) << '\n'
            << "xi2 = " << num(t.xi2) << '\n'
            << "xi1 = " << num(t.xi1) << '\n'
            << "xi0 = " << num(t.xi0) << '\n'
            << "C_hat = " << num(t.c_hat) << '\n'
            << "C1 = " << num(t.c1) << '\n'
            << "D_hat = " << num(t.d_hat) << '\n'
            << "D = " << num(t.d) << '\n'
            << "varpi = " << num(t.varpi) << '\n'
            << "lambda = " << num(t.lambda) << '\n'
            << "Cu_star = " << num(t.cu_star) << '\n'
            << "time_to_ball_bound = " << num(t.time_to_ball) << '\n';
  return 0;
}

int run_margin(const Common& c, std::vector<int> ms, std::vector<double> lambdas) {
  std::string text;
  ScenarioConfig cfg = load(c, text);
  if (ms.empty()) ms = {cfg.actuator_grid()};
  if (lambdas.empty()) lambdas = {cfg.lambda};
  const auto model =
      Model::create(build_mesh(cfg.nx, cfg.ny, RectangleDomain(cfg.lx, cfg.ly)), cfg.params);
  std::cout << "M  lambda  theta_min  varpi  pass  residual  iterations\n";
  for (int m : ms) {
    const ActuatorGrid grid(m, cfg.r, model->mesh.domain());
    for (double lambda : lambdas) {
      const TheoryConstants t = compute_theory_constants(cfg.mu, cfg.params, cfg.lx * cfg.ly, lambda, grid);
      const MarginReport rep = stabilizability_margin(*model, m, cfg.r, lambda, t.varpi);
      std::cout << rep.m << "  " << num(rep.lambda) << "  " << num(rep.theta_min) << "  " << num(rep.varpi) << "  "
                << (rep.pass ? "yes" : "no") << "  " << num(rep.residual) << "  " << rep.iterations << '\n';
    }
  }
  return 0;
}

struct ToyArgs {
  double r = -1.0;
  std::string cu = "inf";
  double mu = 1.0;
  double z0 = 2.0;
  std::string law = "saturated";
  double horizon = 5.0;
  int stride = 100;
};

int run_toy(const Common& c, const ToyArgs& a) {
  const ToySeries s = ode_toy_simulate(a.r, parse_number(a.cu), a.mu, a.z0, parse_toy_law(a.law), a.horizon);
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    file.open(fs::path(c.out) / "ode_toy.csv");
    os = &file;
  }
  *os << "t,z,u\n";
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    if (i % static_cast<std::size_t>(a.stride) != 0 && i + 1 != s.t.size()) continue;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.t[i], s.z[i], s.u[i]);
    *os << buf;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stabilization of the Schloegl model to trajectories with saturated feedback and RHC"};
  app.require_subcommand(1);

  Common common;
  auto* free_cmd = app.add_subcommand("simulate-free", "run without control");
  add_common(free_cmd, common, true);
  auto* fb_cmd = app.add_subcommand("simulate-feedback", "saturated explicit feedback");
  add_common(fb_cmd, common, true);
  auto* rhc_cmd = app.add_subcommand("run-rhc", "receding horizon control");
  add_common(rhc_cmd, common, true);
  auto* table_cmd = app.add_subcommand("table1", "RHC vs saturated feedback cost table");
  add_common(table_cmd, common, true);

  auto* sweep_cmd = app.add_subcommand("sweep", "one run per parameter value");
  add_common(sweep_cmd, common, true);
  std::string axis;
  std::vector<std::string> values;
  sweep_cmd->add_option("--axis", axis, "cu, lambda or msigma");
  sweep_cmd->add_option("--values", values, "values along the axis")->delimiter(',');

  auto* const_cmd = app.add_subcommand("constants", "theory constants");
  add_common(const_cmd, common, false);
  double mu = 0.0;
  auto* mu_opt = const_cmd->add_option("--mu", mu, "decay rate");

  auto* margin_cmd = app.add_subcommand("margin", "discrete stabilizability margin");
  add_common(margin_cmd, common, false);
  std::vector<int> ms;
  std::vector<double> lambdas;
  margin_cmd->add_option("--m", ms, "actuator grid parameters M")->delimiter(',');
  margin_cmd->add_option("--lambda", lambdas, "feedback gains")->delimiter(',');

  auto* toy_cmd = app.add_subcommand("ode-toy", "scalar ODE demonstrations");
  add_common(toy_cmd, common, false);
  ToyArgs toy;
  toy_cmd->add_option("--r", toy.r, "reaction coefficient");
  toy_cmd->add_option("--cu", toy.cu, "control bound (inf or e^x allowed)");
  toy_cmd->add_option("--mu", toy.mu, "target rate");
  toy_cmd->add_option("--z0", toy.z0, "initial value");
  toy_cmd->add_option("--law", toy.law, "saturated or max-effort");
  toy_cmd->add_option("--horizon", toy.horizon, "final time");
  toy_cmd->add_option("--stride", toy.stride, "output stride")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*free_cmd) return run_single(common, ControllerKind::None);
    if (*fb_cmd) return run_single(common, ControllerKind::Saturated);
    if (*rhc_cmd) return run_single(common, ControllerKind::Rhc);
    if (*table_cmd) return run_table(common);
    if (*sweep_cmd) return run_sweep_cmd(common, axis, values);
    if (*const_cmd) return run_constants(common, mu_opt->count() ? std::optional<double>(mu) : std::nullopt);
    if (*margin_cmd) return run_margin(common, ms, lambdas);
    if (*toy_cmd) return run_toy(common, toy);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
