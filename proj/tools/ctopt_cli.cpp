// ctopt: sweeps, single simulations and frequency-domain checks from the command line.
//
// Exit status: 0 success, 1 invalid input, 2 runtime failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ctopt/ctopt.hpp"

namespace {

using namespace ctopt;

constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidInput("cannot open " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

/// Receives either stdout or a file, depending on the path ("-" or empty is stdout).
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct AlgorithmOptions {
  std::string name = "heavy_ball";
  std::string spec_file;

  void attach(CLI::App* app) {
    app->add_option("--algorithm", name, "gradient_flow | heavy_ball | fast_kth:<k>")->capture_default_str();
    app->add_option("--spec", spec_file, "JSON file with an explicit {k, g, h, label} spec");
  }
  [[nodiscard]] AlgorithmSpec resolve(double kappa) const {
    if (!spec_file.empty()) return algorithm_from_json(read_json_file(spec_file));
    return algorithm_from_name(name, kappa);
  }
};

struct SweepOptions {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::vector<double> kappas;
  std::vector<std::string> algorithms;
  std::optional<int> n_functions, n_initial_conditions, record_stride, threads;
  std::optional<double> init_std, dt, tol, t_max, t_fit_start;
  std::optional<std::string> objective;
};

ExperimentConfig build_config(const SweepOptions& o) {
  ExperimentConfig cfg;
  if (const char* env = std::getenv("CTOPT_OUTPUT_DIR"); env != nullptr && *env != '\0') cfg.output_dir = env;
  if (!o.config_file.empty()) cfg = config_from_json(read_json_file(o.config_file), cfg);
  if (o.seed) cfg.seed = *o.seed;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (!o.kappas.empty()) cfg.kappas = o.kappas;
  if (!o.algorithms.empty()) {
    cfg.algorithms.clear();
    for (const auto& a : o.algorithms) cfg.algorithms.emplace_back(a);
  }
  if (o.n_functions) cfg.n_functions = *o.n_functions;
  if (o.n_initial_conditions) cfg.n_initial_conditions = *o.n_initial_conditions;
  if (o.threads) cfg.threads = *o.threads;
  if (o.init_std) cfg.init_std = *o.init_std;
  if (o.dt) cfg.sim.dt = *o.dt;
  if (o.tol) cfg.sim.tol = *o.tol;
  if (o.t_max) cfg.sim.t_max = *o.t_max;
  if (o.record_stride) cfg.sim.record_stride = *o.record_stride;
  if (o.t_fit_start) cfg.t_fit_start = *o.t_fit_start;
  if (o.objective) cfg.objective = objective_mode_from_string(*o.objective);
  cfg.validate();
  return cfg;
}

void add_sim_options(CLI::App* app, SimConfig& sim) {
  app->add_option("--dt", sim.dt, "RK4 step")->capture_default_str();
  app->add_option("--tol", sim.tol, "termination norm")->capture_default_str();
  app->add_option("--t_max", sim.t_max, "time cap")->capture_default_str();
  app->add_option("--record_stride", sim.record_stride, "store every m-th step")->capture_default_str();
}

int run_sweep_command(const SweepOptions& o) {
  const ExperimentConfig cfg = build_config(o);
  const SweepResult result = run_sweep(cfg);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  const PlotFiles files = emit_plot_data(result.summaries, result.runs, cfg.output_dir);
  for (const auto& s : result.summaries) {
    std::cerr << s.algorithm << " kappa=" << format_double(s.kappa) << " mean_rho=" << format_double(s.mean_rho)
              << " std_rho=" << format_double(s.std_rho) << " n=" << s.n_runs << '\n';
  }
  std::cout << files.summary.string() << '\n' << files.runs.string() << '\n' << files.theory.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-time optimization algorithms: simulation, rates and stability"};
  app.require_subcommand(1);

  SweepOptions sw;
  auto* sweep = app.add_subcommand("sweep", "randomized condition-number sweep; writes summary/runs/theory CSV");
  sweep->add_option("--config", sw.config_file, "JSON experiment config");
  sweep->add_option("--seed", sw.seed, "64-bit seed");
  sweep->add_option("--output_dir,--output-dir", sw.output_dir, "output directory (default $CTOPT_OUTPUT_DIR or .)");
  sweep->add_option("--kappas", sw.kappas, "condition numbers");
  sweep->add_option("--algorithms", sw.algorithms, "algorithm names");
  sweep->add_option("--n_functions", sw.n_functions);
  sweep->add_option("--n_initial_conditions", sw.n_initial_conditions);
  sweep->add_option("--init_std", sw.init_std);
  sweep->add_option("--dt", sw.dt);
  sweep->add_option("--tol", sw.tol);
  sweep->add_option("--t_max", sw.t_max);
  sweep->add_option("--record_stride", sw.record_stride);
  sweep->add_option("--t_fit_start", sw.t_fit_start);
  sweep->add_option("--objective", sw.objective, "piecewise | quadratic");
  sweep->add_option("--threads", sw.threads, "worker threads");

  AlgorithmOptions sim_alg;
  SimConfig sim_cfg;
  double sim_kappa = 16.0;
  std::optional<double> sim_lambda;
  std::string sim_function;
  std::uint64_t sim_seed = 0;
  std::vector<double> sim_z0;
  double sim_fit_start = kDefaultFitStart;
  std::string sim_output;
  auto* simulate_cmd = app.add_subcommand("simulate", "single RK4 run; trajectory CSV (t, z_1..z_m)");
  sim_alg.attach(simulate_cmd);
  simulate_cmd->add_option("--kappa", sim_kappa)->capture_default_str();
  simulate_cmd->add_option("--lambda", sim_lambda, "use the quadratic lambda x^2 / 2");
  simulate_cmd->add_option("--function", sim_function, "JSON function record from genfuncs");
  simulate_cmd->add_option("--seed", sim_seed, "seed for sampling a function with mu = 1/kappa")->capture_default_str();
  simulate_cmd->add_option("--z0", sim_z0, "initial state (default: x = 1, derivatives 0)");
  simulate_cmd->add_option("--t_fit_start", sim_fit_start)->capture_default_str();
  simulate_cmd->add_option("--output", sim_output, "trajectory CSV path (default stdout)");
  add_sim_options(simulate_cmd, sim_cfg);

  AlgorithmOptions roots_alg;
  double roots_kappa = 4.0;
  std::vector<double> roots_lambdas;
  int roots_grid = 0;
  auto* roots = app.add_subcommand("roots", "char-poly roots as CSV (lambda_f, re, im)");
  roots_alg.attach(roots);
  roots->add_option("--kappa", roots_kappa)->capture_default_str();
  roots->add_option("--lambda", roots_lambdas, "lambda_f values");
  roots->add_option("--grid", roots_grid, "uniform grid on [1/kappa, 1] instead of --lambda");

  AlgorithmOptions nyq_alg;
  double nyq_kappa = 4.0, nyq_lambda = 1.0, nyq_shift = 0.0;
  int nyq_per_decade = 200;
  std::string nyq_output;
  auto* nyquist = app.add_subcommand("nyquist", "Nyquist curve CSV (omega, re, im) and stability verdict");
  nyq_alg.attach(nyquist);
  nyquist->add_option("--kappa", nyq_kappa)->capture_default_str();
  nyquist->add_option("--lambda", nyq_lambda)->capture_default_str();
  nyquist->add_option("--shift", nyq_shift, "contour Re(s) = -shift")->capture_default_str();
  nyquist->add_option("--per_decade", nyq_per_decade, "exported points per decade")->capture_default_str();
  nyquist->add_option("--output", nyq_output, "curve CSV path (default stdout)");

  AlgorithmOptions circ_alg;
  double circ_kappa = 4.0, circ_alpha = 0.55;
  int circ_per_decade = 200;
  std::string circ_output;
  auto* circle = app.add_subcommand("circle", "circle-criterion check");
  circ_alg.attach(circle);
  circle->add_option("--kappa", circ_kappa)->capture_default_str();
  circle->add_option("--alpha", circ_alpha, "sector lower bound alpha_s")->capture_default_str();
  circle->add_option("--output", circ_output, "optional CSV of P_T(i omega)");
  circle->add_option("--per_decade", circ_per_decade, "exported points per decade")->capture_default_str();

  double gen_kappa = 16.0;
  std::optional<double> gen_mu;
  int gen_count = 10;
  std::uint64_t gen_seed = 0;
  std::string gen_output;
  auto* genfuncs = app.add_subcommand("genfuncs", "sample test functions as JSON records");
  genfuncs->add_option("--kappa", gen_kappa, "mu = 1/kappa")->capture_default_str();
  genfuncs->add_option("--mu", gen_mu, "explicit mu (overrides --kappa)");
  genfuncs->add_option("--count", gen_count)->capture_default_str();
  genfuncs->add_option("--seed", gen_seed)->capture_default_str();
  genfuncs->add_option("--output", gen_output, "JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*sweep) return run_sweep_command(sw);

    if (*simulate_cmd) {
      const AlgorithmSpec spec = sim_alg.resolve(sim_kappa);
      std::vector<double> z0 = sim_z0;
      if (z0.empty()) {
        z0.assign(static_cast<std::size_t>(spec.order()), 0.0);
        z0[0] = 1.0;
      }
      Trajectory traj;
      if (sim_lambda) {
        traj = simulate(spec, QuadraticObjective(*sim_lambda), z0, sim_cfg);
      } else if (!sim_function.empty()) {
        traj = simulate(spec, function_from_json(read_json_file(sim_function)), z0, sim_cfg);
      } else {
        std::mt19937_64 rng(sim_seed);
        traj = simulate(spec, sample_function(rng, 1.0 / sim_kappa), z0, sim_cfg);
      }
      Sink sink(sim_output);
      write_trajectory_csv(sink.stream(), traj);
      std::cerr << "terminated_by=" << to_string(traj.terminated_by) << " t_end=" << format_double(traj.t_end);
      if (traj.terminated_by != Termination::divergence) {
        try {
          const RateEstimate est = estimate_rate(traj, sim_fit_start);
          std::cerr << " rho_sim=" << format_double(est.rho_sim) << " c_sim=" << format_double(est.c_sim);
        } catch (const NumericalError& e) {
          std::cerr << " (no rate: " << e.what() << ")";
        }
      }
      std::cerr << '\n';
      return 0;
    }

    if (*roots) {
      const AlgorithmSpec spec = roots_alg.resolve(roots_kappa);
      std::vector<double> lambdas = roots_lambdas;
      if (roots_grid > 0) lambdas = lambda_grid(roots_kappa, roots_grid);
      if (lambdas.empty()) lambdas = {1.0 / roots_kappa, 1.0};
      std::cout << "lambda_f,re,im\n";
      for (double lf : lambdas) {
        for (const Complex& r : find_roots(char_poly(spec, lf)).roots) {
          std::cout << format_double(lf) << ',' << format_double(r.real()) << ',' << format_double(r.imag()) << '\n';
        }
      }
      return 0;
    }

    if (*nyquist) {
      const AlgorithmSpec spec = nyq_alg.resolve(nyq_kappa);
      const bool stable = nyquist_stable(spec, nyq_kappa, nyq_lambda, nyq_shift);
      const TransferFunction tf = transfer_function(spec, nyq_kappa);
      const NyquistCurve curve =
          nyquist_curve(tf, nyq_lambda - 1.0 / nyq_kappa, nyq_shift, default_omega_grid(nyq_per_decade));
      Sink sink(nyq_output);
      write_curve_csv(sink.stream(), curve);
      std::cerr << "stable=" << (stable ? "true" : "false") << " shift=" << format_double(nyq_shift) << '\n';
      return 0;
    }

    if (*circle) {
      const AlgorithmSpec spec = circ_alg.resolve(circ_kappa);
      const CircleReport rep = circle_criterion(spec, circ_kappa, circ_alpha);
      std::cout << "ok=" << (rep.ok ? "true" : "false") << " case=" << to_string(rep.which)
                << " slack=" << format_double(rep.slack) << " disk=[" << format_double(rep.disk_left) << ','
                << format_double(rep.disk_right) << ']' << (rep.near_margin ? " near-margin" : "") << '\n';
      if (!circ_output.empty()) {
        const TransferFunction tf = cancel_common_factor(transfer_function(spec, circ_kappa));
        Sink sink(circ_output);
        write_curve_csv(sink.stream(), nyquist_curve(tf, 1.0, 0.0, default_omega_grid(circ_per_decade)));
      }
      return 0;
    }

    if (*genfuncs) {
      if (gen_count < 1) throw InvalidInput("--count must be >= 1");
      const double mu = gen_mu ? *gen_mu : 1.0 / gen_kappa;
      std::mt19937_64 rng(gen_seed);
      nlohmann::json out = nlohmann::json::array();
      for (int i = 0; i < gen_count; ++i) {
        const PiecewiseQuadratic f = sample_function(rng, mu);
        nlohmann::json rec = f;
        rec["sector_alpha"] = sector_alpha(f);
        out.push_back(rec);
      }
      Sink sink(gen_output);
      sink.stream() << out.dump(2) << '\n';
      return 0;
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
