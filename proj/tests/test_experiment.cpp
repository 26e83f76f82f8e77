#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ctopt/experiment.hpp"

using namespace ctopt;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.kappas = {4.0, 16.0};
  cfg.algorithms = {AlgorithmDescriptor("heavy_ball"), AlgorithmDescriptor("fast_kth:3")};
  cfg.n_functions = 2;
  cfg.n_initial_conditions = 2;
  cfg.seed = 1234;
  cfg.sim.t_max = 300.0;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ctopt_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(ExperimentConfig, DefaultsAndValidation) {
  const ExperimentConfig cfg;
  EXPECT_EQ(cfg.kappas, (std::vector<double>{4.0, 16.0, 64.0, 256.0}));
  EXPECT_EQ(cfg.n_functions, 10);
  EXPECT_EQ(cfg.n_initial_conditions, 10);
  EXPECT_EQ(cfg.init_std, 4.5);
  EXPECT_EQ(cfg.sim.dt, 0.01);
  EXPECT_EQ(cfg.sim.tol, 1e-8);
  EXPECT_EQ(cfg.t_fit_start, 10.0);
  EXPECT_NO_THROW(cfg.validate());

  ExperimentConfig bad = cfg;
  bad.kappas = {0.5};
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = cfg;
  bad.n_initial_conditions = 0;
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = cfg;
  bad.init_std = 0.0;
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = cfg;
  bad.kappas.clear();
  EXPECT_THROW(bad.validate(), InvalidInput);
  EXPECT_THROW(AlgorithmDescriptor("bogus"), InvalidInput);
}

TEST(ExperimentConfig, JsonRoundTripAndOverrides) {
  const auto j = nlohmann::json::parse(R"({
    "kappas": [2, 8],
    "algorithms": ["gradient_flow", {"k": 2, "g": [0.5], "h": [1.0], "label": "mine"}],
    "n_functions": 3,
    "seed": 99,
    "sim": {"dt": 0.02},
    "objective": "quadratic"
  })");
  const ExperimentConfig cfg = config_from_json(j);
  EXPECT_EQ(cfg.kappas, (std::vector<double>{2.0, 8.0}));
  ASSERT_EQ(cfg.algorithms.size(), 2u);
  EXPECT_EQ(cfg.algorithms[1].label(), "mine");
  EXPECT_EQ(cfg.algorithms[1].resolve(100.0), AlgorithmSpec(2, {0.5}, {1.0}, "mine"));
  EXPECT_EQ(cfg.n_functions, 3);
  EXPECT_EQ(cfg.n_initial_conditions, 10);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.sim.dt, 0.02);
  EXPECT_EQ(cfg.sim.tol, 1e-8);
  EXPECT_EQ(cfg.objective, ObjectiveMode::quadratic);

  const nlohmann::json back = cfg;
  const ExperimentConfig again = config_from_json(back);
  EXPECT_EQ(again.kappas, cfg.kappas);
  EXPECT_EQ(again.algorithms[0].label(), "gradient_flow");
  EXPECT_EQ(again.algorithms[1].resolve(1.0), cfg.algorithms[1].resolve(1.0));
  EXPECT_EQ(again.sim.dt, cfg.sim.dt);

  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"kappas": "x"})")), InvalidInput);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"objective": "cubic"})")), InvalidInput);
}

TEST(DeriveSeed, StableAndSensitive) {
  EXPECT_EQ(derive_seed(1, {2, 3, 4}), derive_seed(1, {2, 3, 4}));
  EXPECT_NE(derive_seed(1, {2, 3, 4}), derive_seed(1, {2, 4, 3}));
  EXPECT_NE(derive_seed(1, {2, 3, 4}), derive_seed(2, {2, 3, 4}));
  // Frozen value: the stream must not change between builds.
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Sweep, ObjectivesSharedAcrossAlgorithms) {
  const ExperimentConfig cfg = small_config();
  const auto a = std::get<PiecewiseQuadratic>(sweep_objective(cfg, 1, 1));
  const auto b = std::get<PiecewiseQuadratic>(sweep_objective(cfg, 1, 1));
  EXPECT_EQ(a.hessians(), b.hessians());
  EXPECT_EQ(a.mu(), 1.0 / 16.0);
  EXPECT_NE(a.hessians(), std::get<PiecewiseQuadratic>(sweep_objective(cfg, 1, 0)).hessians());
  const auto z2 = sweep_initial_state(cfg, 0, 1, 1, 2);
  const auto z3 = sweep_initial_state(cfg, 0, 1, 1, 3);
  EXPECT_EQ(z2[0], z3[0]);
  EXPECT_EQ(z2[1], z3[1]);
}

TEST(Sweep, RecordsAreReplayable) {
  const ExperimentConfig cfg = small_config();
  const SweepResult r = run_sweep(cfg);
  ASSERT_EQ(r.runs.size(), 2u * 2u * 2u * 2u);
  ASSERT_EQ(r.summaries.size(), 4u);
  const RunRecord& rec = r.runs[11];
  const RunRecord again = run_single(cfg, 1, 0, rec.function_id, rec.ic_id);
  EXPECT_EQ(again.kappa, rec.kappa);
  EXPECT_EQ(again.algorithm, rec.algorithm);
  EXPECT_EQ(again.rho_sim, rec.rho_sim);
  EXPECT_EQ(again.c_sim, rec.c_sim);
  EXPECT_EQ(again.t_end, rec.t_end);
  // Order is (kappa, algorithm, function_id, ic_id).
  EXPECT_EQ(r.summaries[0].algorithm, "heavy_ball");
  EXPECT_EQ(r.summaries[1].algorithm, "fast_kth:3");
  EXPECT_EQ(r.summaries[2].kappa, 16.0);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  ExperimentConfig cfg = small_config();
  const SweepResult one = run_sweep(cfg);
  cfg.threads = 4;
  const SweepResult four = run_sweep(cfg);
  ASSERT_EQ(one.runs.size(), four.runs.size());
  for (std::size_t i = 0; i < one.runs.size(); ++i) {
    EXPECT_EQ(one.runs[i].rho_sim, four.runs[i].rho_sim);
    EXPECT_EQ(one.runs[i].c_sim, four.runs[i].c_sim);
  }
}

TEST(Sweep, QuadraticModeMatchesSpectrum) {
  ExperimentConfig cfg;
  cfg.kappas = {4.0};
  cfg.algorithms = {AlgorithmDescriptor("heavy_ball")};
  cfg.n_functions = 5;
  cfg.n_initial_conditions = 5;
  cfg.objective = ObjectiveMode::quadratic;
  const SweepResult r = run_sweep(cfg);
  ASSERT_EQ(r.summaries.size(), 1u);
  EXPECT_EQ(r.summaries[0].n_runs, 25u);
  EXPECT_NEAR(r.summaries[0].mean_rho, 0.5, 0.01);
}

TEST(Sweep, UnstableRunsExcludedAndWarned) {
  ExperimentConfig cfg;
  cfg.kappas = {1e6};
  cfg.algorithms = {AlgorithmDescriptor("fast_kth:3"), AlgorithmDescriptor("gradient_flow")};
  cfg.n_functions = 1;
  cfg.n_initial_conditions = 2;
  cfg.sim.t_max = 50.0;
  const SweepResult r = run_sweep(cfg);
  bool rk4_warning = false;
  for (const auto& w : r.warnings) rk4_warning = rk4_warning || w.find("unstable for fast_kth:3") != std::string::npos;
  EXPECT_TRUE(rk4_warning);
  for (const auto& run : r.runs)
    if (run.algorithm == "fast_kth:3") {
      EXPECT_EQ(run.terminated_by, Termination::divergence);
    }
  ASSERT_EQ(r.summaries.size(), 1u);
  EXPECT_EQ(r.summaries[0].algorithm, "gradient_flow");
}

TEST(EmitPlotData, HeadersFilesAndRoundTrip) {
  const ExperimentConfig cfg = small_config();
  const SweepResult r = run_sweep(cfg);
  const auto dir = scratch("emit");
  const PlotFiles files = emit_plot_data(r.summaries, r.runs, dir);
  ASSERT_TRUE(std::filesystem::exists(files.summary));
  ASSERT_TRUE(std::filesystem::exists(files.runs));
  ASSERT_TRUE(std::filesystem::exists(files.theory));

  std::ifstream ss(files.summary), rs(files.runs), ts(files.theory);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "kappa,algorithm,n_runs,mean_rho,std_rho,mean_c,std_c");
  std::getline(rs, line);
  EXPECT_EQ(line, "kappa,algorithm,function_id,ic_id,rho_sim,c_sim,t_end,terminated_by");

  std::ifstream ss2(files.summary), rs2(files.runs);
  const auto summaries = read_summary_csv(ss2);
  ASSERT_EQ(summaries.size(), r.summaries.size());
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    EXPECT_EQ(summaries[i].kappa, r.summaries[i].kappa);
    EXPECT_EQ(summaries[i].algorithm, r.summaries[i].algorithm);
    EXPECT_EQ(summaries[i].n_runs, r.summaries[i].n_runs);
    EXPECT_EQ(summaries[i].mean_rho, r.summaries[i].mean_rho);
    EXPECT_EQ(summaries[i].std_c, r.summaries[i].std_c);
  }
  const auto runs = read_runs_csv(rs2);
  ASSERT_EQ(runs.size(), r.runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(runs[i].rho_sim, r.runs[i].rho_sim);
    EXPECT_EQ(runs[i].c_sim, r.runs[i].c_sim);
    EXPECT_EQ(runs[i].t_end, r.runs[i].t_end);
    EXPECT_EQ(runs[i].terminated_by, r.runs[i].terminated_by);
  }
  std::filesystem::remove_all(dir);
}

TEST(EmitPlotData, SingleRowAndTheoryValues) {
  SweepSummary s;
  s.kappa = 64.0;
  s.algorithm = "fast_kth:3";
  s.n_runs = 1;
  s.mean_rho = 0.25;
  const auto dir = scratch("theory");
  const PlotFiles files = emit_plot_data({s}, {}, dir);
  const std::string theory = slurp(files.theory);
  EXPECT_EQ(theory, "kappa,inv_kappa,inv_sqrt_kappa,inv_cbrt_kappa\n64,0.015625,0.125,0.25\n");
  EXPECT_EQ(slurp(files.runs), "kappa,algorithm,function_id,ic_id,rho_sim,c_sim,t_end,terminated_by\n");
  EXPECT_THROW(emit_plot_data({}, {}, dir), InvalidInput);
  std::filesystem::remove_all(dir);
}

TEST(EmitPlotData, ByteIdenticalForSameSeed) {
  const ExperimentConfig cfg = small_config();
  const auto a = scratch("det_a"), b = scratch("det_b");
  const SweepResult r1 = run_sweep(cfg);
  emit_plot_data(r1.summaries, r1.runs, a);
  const SweepResult r2 = run_sweep(cfg);
  emit_plot_data(r2.summaries, r2.runs, b);
  for (const char* f : {"summary.csv", "runs.csv", "theory.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}
