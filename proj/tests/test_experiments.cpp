#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "schloegl/experiments.hpp"

using namespace schloegl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header) {
  std::ifstream in(p);
  std::getline(in, *header);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("schloegl_test_" + name);
  fs::remove_all(p);
  return p;
}

const char* kSmall =
    "[mesh]\nnx = 8\nny = 8\n[actuators]\nnorm = max\n[feedback]\ncu = e^1\n[forcing]\ntype = periodic\n"
    "[initial]\ntarget = 2\nstate = -1\n[time]\ndt = 0.01\nt_inf = 1\nstride = 1\n[controller]\ntype = saturated\n";

}  // namespace

TEST(Scenario, SeriesSchemaAndCostReintegration) {
  const auto cfg = parse_config(kSmall);
  const auto out = scratch("series");
  const auto art = run_scenario(cfg, kSmall, out);
  for (const char* f : {"config.ini", "series.csv", "target.csv", "summary.txt"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_FALSE(fs::exists(out / "states.csv"));
  std::string header;
  const auto rows = read_csv(out / "series.csv", &header);
  EXPECT_EQ(header, "t,err_l2,log_err_l2,u_norm,J_running");
  ASSERT_EQ(rows.size(), 101u);
  const double k = cfg.dt;
  double j = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 5u);
    EXPECT_NEAR(rows[i][0], k * static_cast<double>(i), 1e-12);
    EXPECT_NEAR(rows[i][2], std::log(rows[i][1]), 1e-12);
    EXPECT_LE(rows[i][3], 3.0 * cfg.cu * (1.0 + 1e-12));
    if (i > 0) {
      j += 0.5 * k * (rows[i - 1][1] * rows[i - 1][1] + rows[i][1] * rows[i][1]) +
           cfg.beta * k * rows[i - 1][3] * rows[i - 1][3];
    }
    EXPECT_NEAR(rows[i][4], j, 1e-12 * (1.0 + j));
  }
  for (double c : art.record.constraint_norm) EXPECT_LE(c, cfg.cu * (1.0 + 1e-12));
  EXPECT_NEAR(art.summary.j_total, j, 1e-12 * j);
  EXPECT_NEAR(art.summary.j_state + art.summary.j_control, art.summary.j_total, 1e-12 * j);
  EXPECT_TRUE(art.summary.status == RunStatus::Stable || art.summary.status == RunStatus::CompletedUnstable);
  EXPECT_EQ(parse_config(slurp(out / "config.ini")).cu, cfg.cu);
}

TEST(Scenario, ReproducibleOutputs) {
  const auto cfg = parse_config(kSmall);
  const auto a = scratch("repro_a");
  const auto b = scratch("repro_b");
  (void)run_scenario(cfg, kSmall, a);
  (void)run_scenario(cfg, kSmall, b);
  for (const char* f : {"config.ini", "series.csv", "target.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Scenario, NoControllerAtEquilibriumStaysPut) {
  const std::string text =
      "[mesh]\nnx = 6\nny = 6\n[initial]\ntarget = 2\nstate = 2\n[time]\ndt = 0.01\nt_inf = 0.5\n";
  const auto art = run_scenario(parse_config(text), text, {});
  EXPECT_EQ(art.summary.final_error, 0.0);
  EXPECT_EQ(art.summary.j_total, 0.0);
}

TEST(Scenario, RhcRunReportsWindows) {
  const std::string text = std::string(kSmall) +
                           "[controller]\ntype = rhc\n[rhc]\nhorizon = 0.3\ndelta = 0.2\nbeta = 1e-3\n";
  const auto art = run_scenario(parse_config(text), text, {});
  EXPECT_EQ(art.summary.rhc_windows, 5);
  EXPECT_GT(art.summary.rhc_iterations, 0);
}

TEST(Sweep, RejectsEmptyListAndOrdersResults) {
  const auto cfg = parse_config(kSmall);
  EXPECT_THROW(run_sweep("lambda", {}, cfg, {}, 1), std::invalid_argument);
  const auto out = scratch("sweep");
  const auto res = run_sweep("lambda", {1.0, 50.0}, cfg, out, 1);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_EQ(res[0].value, 1.0);
  EXPECT_GT(res[0].summary.final_error, res[1].summary.final_error);
  EXPECT_TRUE(fs::exists(out / "sweep.csv"));
}

TEST(ParallelFor, RunsEveryJobOnce) {
  std::vector<int> hits(37, 0);
  parallel_for(37, 4, [&](int i) { hits[static_cast<std::size_t>(i)] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

namespace {

ScenarioConfig example(const std::string& name) {
  return load_config(std::string(SCHLOEGL_CONFIG_DIR) + "/" + name);
}

}  // namespace

TEST(Examples, LeavingAStableStateForTheUnstableOne) {
  const auto s = run_scenario(example("example1_large_cu.ini"), "", {}).summary;
  EXPECT_LT(s.final_error, 1e-6);
  EXPECT_EQ(s.status, RunStatus::Stable);
}

TEST(Examples, LargeTargetSettlesNearTwo) {
  const auto cfg = example("example3_large_cu.ini");
  const auto target = compute_target(build_setup(cfg), cfg.t_inf);
  const auto& norms = target->state_norm;
  EXPECT_GT(norms.front(), 5.0);
  EXPECT_LT(norms[static_cast<std::size_t>(0.5 / cfg.dt)], 0.5 * norms.front());
  for (std::size_t i = norms.size() / 2; i < norms.size(); ++i) {
    EXPECT_GT(norms[i], 1.5);
    EXPECT_LT(norms[i], 2.5);
  }
}

TEST(Examples, SmallGainDoesNotStabilize) {
  const auto cfg = example("example4_sweep.ini");
  const auto res = run_sweep("lambda", {1.0, 5.0, 100.0}, cfg, {}, 1);
  EXPECT_EQ(res[0].summary.status, RunStatus::CompletedUnstable);
  EXPECT_EQ(res[1].summary.status, RunStatus::Stable);
  EXPECT_EQ(res[2].summary.status, RunStatus::Stable);
}

TEST(Examples, MoreActuatorsDecayFaster) {
  const auto cfg = example("example4_sweep.ini");
  const auto res = run_sweep("msigma", {1.0, 4.0, 9.0, 16.0}, cfg, {}, 1);
  for (std::size_t i = 0; i < res.size(); ++i) {
    ASSERT_TRUE(res[i].summary.decay.has_value());
    if (i > 0) {
      EXPECT_GE(res[i].summary.decay->mu, res[i - 1].summary.decay->mu) << res[i].value;
    }
  }
}
