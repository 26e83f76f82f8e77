#pragma once

/**
 * @file experiment.hpp
 * @brief Randomized condition-number sweeps and their CSV outputs.
 *
 * For every kappa the sweep samples n_functions objectives with mu = 1/kappa
 * and n_initial_conditions normal initial states per objective, simulates
 * each algorithm from each state, fits (rho_sim, c_sim) and aggregates per
 * (kappa, algorithm). Every run draws from its own generator seeded by a
 * hash of (seed, kappa index, function id, ic id), so results do not depend
 * on scheduling and any run can be replayed alone.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctopt/algorithm_spec.hpp"
#include "ctopt/csv.hpp"
#include "ctopt/errors.hpp"
#include "ctopt/integrator.hpp"
#include "ctopt/rate_estimation.hpp"
#include "ctopt/test_functions.hpp"

namespace ctopt {

/// Named algorithm resolved per kappa, or a fixed explicit spec.
class AlgorithmDescriptor {
 public:
  explicit AlgorithmDescriptor(std::string name) : name_(std::move(name)) {
    (void)algorithm_from_name(name_, 4.0);
  }
  explicit AlgorithmDescriptor(AlgorithmSpec spec) : name_(spec.label()), fixed_(std::move(spec)) {}

  [[nodiscard]] const std::string& label() const { return name_; }
  [[nodiscard]] AlgorithmSpec resolve(double kappa) const {
    return fixed_ ? *fixed_ : algorithm_from_name(name_, kappa);
  }
  [[nodiscard]] const std::optional<AlgorithmSpec>& fixed() const { return fixed_; }

 private:
  std::string name_;
  std::optional<AlgorithmSpec> fixed_;
};

enum class ObjectiveMode { piecewise, quadratic };

struct ExperimentConfig {
  std::vector<double> kappas{4.0, 16.0, 64.0, 256.0};
  std::vector<AlgorithmDescriptor> algorithms{AlgorithmDescriptor("heavy_ball"), AlgorithmDescriptor("fast_kth:3")};
  int n_functions = 10;
  int n_initial_conditions = 10;
  std::uint64_t seed = 0;
  double init_std = 4.5;
  SimConfig sim{};
  double t_fit_start = kDefaultFitStart;
  ObjectiveMode objective = ObjectiveMode::piecewise;
  std::string output_dir = ".";
  int threads = 1;

  void validate() const {
    if (kappas.empty()) throw InvalidInput("at least one kappa is required");
    for (double k : kappas)
      if (!(k >= 1.0) || !std::isfinite(k)) throw InvalidInput("kappas must be finite and >= 1");
    if (algorithms.empty()) throw InvalidInput("at least one algorithm is required");
    if (n_functions < 1 || n_initial_conditions < 1) throw InvalidInput("run counts must be >= 1");
    if (!(init_std > 0.0)) throw InvalidInput("init_std must be positive");
    if (threads < 1) throw InvalidInput("threads must be >= 1");
    sim.validate();
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  nlohmann::json algs = nlohmann::json::array();
  for (const auto& a : c.algorithms) {
    if (a.fixed()) {
      algs.push_back(*a.fixed());
    } else {
      algs.push_back(a.label());
    }
  }
  j = nlohmann::json{{"kappas", c.kappas},
                     {"algorithms", algs},
                     {"n_functions", c.n_functions},
                     {"n_initial_conditions", c.n_initial_conditions},
                     {"seed", c.seed},
                     {"init_std", c.init_std},
                     {"sim",
                      {{"dt", c.sim.dt}, {"tol", c.sim.tol}, {"t_max", c.sim.t_max}, {"record_stride", c.sim.record_stride}}},
                     {"t_fit_start", c.t_fit_start},
                     {"objective", c.objective == ObjectiveMode::piecewise ? "piecewise" : "quadratic"},
                     {"output_dir", c.output_dir},
                     {"threads", c.threads}};
}

inline ObjectiveMode objective_mode_from_string(const std::string& s) {
  if (s == "piecewise") return ObjectiveMode::piecewise;
  if (s == "quadratic") return ObjectiveMode::quadratic;
  throw InvalidInput("objective must be 'piecewise' or 'quadratic'");
}

/// Missing keys keep the defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c = {}) {
  try {
    if (j.contains("kappas")) c.kappas = j.at("kappas").get<std::vector<double>>();
    if (j.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : j.at("algorithms")) {
        if (a.is_string()) {
          c.algorithms.emplace_back(a.get<std::string>());
        } else {
          c.algorithms.emplace_back(algorithm_from_json(a));
        }
      }
    }
    c.n_functions = j.value("n_functions", c.n_functions);
    c.n_initial_conditions = j.value("n_initial_conditions", c.n_initial_conditions);
    c.seed = j.value("seed", c.seed);
    c.init_std = j.value("init_std", c.init_std);
    if (j.contains("sim")) {
      const auto& s = j.at("sim");
      c.sim.dt = s.value("dt", c.sim.dt);
      c.sim.tol = s.value("tol", c.sim.tol);
      c.sim.t_max = s.value("t_max", c.sim.t_max);
      c.sim.record_stride = s.value("record_stride", c.sim.record_stride);
    }
    c.t_fit_start = j.value("t_fit_start", c.t_fit_start);
    if (j.contains("objective")) c.objective = objective_mode_from_string(j.at("objective").get<std::string>());
    c.output_dir = j.value("output_dir", c.output_dir);
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad experiment config: ") + e.what());
  }
  return c;
}

struct RunRecord {
  double kappa = 0.0;
  std::string algorithm;
  int function_id = 0;
  int ic_id = 0;
  double rho_sim = std::nan("");
  double c_sim = std::nan("");
  double t_end = 0.0;
  Termination terminated_by = Termination::t_max_reached;

  /// Entered into the sweep statistics.
  [[nodiscard]] bool usable() const {
    return terminated_by != Termination::divergence && std::isfinite(rho_sim) && std::isfinite(c_sim);
  }
};

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

using SweepObjective = std::variant<PiecewiseQuadratic, QuadraticObjective>;

/// Objective number function_id at kappa index kappa_index; identical for every algorithm.
inline SweepObjective sweep_objective(const ExperimentConfig& cfg, std::size_t kappa_index, int function_id) {
  const double kappa = cfg.kappas.at(kappa_index);
  std::mt19937_64 rng(derive_seed(cfg.seed, {0, kappa_index, static_cast<std::uint64_t>(function_id)}));
  if (cfg.objective == ObjectiveMode::quadratic) {
    std::uniform_real_distribution<double> lam(1.0 / kappa, 1.0);
    return QuadraticObjective(kappa == 1.0 ? 1.0 : lam(rng));
  }
  return sample_function(rng, 1.0 / kappa);
}

/// Independent N(0, init_std^2) components; the first ones are shared across orders.
inline std::vector<double> sweep_initial_state(const ExperimentConfig& cfg, std::size_t kappa_index, int function_id,
                                               int ic_id, std::size_t size) {
  std::mt19937_64 rng(derive_seed(
      cfg.seed, {1, kappa_index, static_cast<std::uint64_t>(function_id), static_cast<std::uint64_t>(ic_id)}));
  std::normal_distribution<double> normal(0.0, cfg.init_std);
  std::vector<double> z(size);
  for (double& v : z) v = normal(rng);
  return z;
}

/// Simulate and estimate one (kappa, algorithm, function, initial condition) tuple.
inline RunRecord run_single(const ExperimentConfig& cfg, std::size_t kappa_index, std::size_t algorithm_index,
                            int function_id, int ic_id) {
  const double kappa = cfg.kappas.at(kappa_index);
  const AlgorithmDescriptor& alg = cfg.algorithms.at(algorithm_index);
  const AlgorithmSpec spec = alg.resolve(kappa);
  const SweepObjective objective = sweep_objective(cfg, kappa_index, function_id);
  const std::vector<double> z0 =
      sweep_initial_state(cfg, kappa_index, function_id, ic_id, static_cast<std::size_t>(spec.order()));

  RunRecord rec;
  rec.kappa = kappa;
  rec.algorithm = alg.label();
  rec.function_id = function_id;
  rec.ic_id = ic_id;
  const Trajectory traj = std::visit([&](const auto& f) { return simulate(spec, f, z0, cfg.sim); }, objective);
  rec.t_end = traj.t_end;
  rec.terminated_by = traj.terminated_by;
  if (traj.terminated_by != Termination::divergence) {
    try {
      const RateEstimate est = estimate_rate(traj, cfg.t_fit_start);
      rec.rho_sim = est.rho_sim;
      rec.c_sim = est.c_sim;
    } catch (const NumericalError&) {
      // Left as NaN; excluded from the statistics.
    }
  }
  return rec;
}

struct SweepResult {
  std::vector<RunRecord> runs;
  std::vector<SweepSummary> summaries;
  std::vector<std::string> warnings;
};

inline SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Task {
    std::size_t kappa_index, algorithm_index;
    int function_id, ic_id;
  };
  std::vector<Task> tasks;
  for (std::size_t ki = 0; ki < cfg.kappas.size(); ++ki)
    for (std::size_t ai = 0; ai < cfg.algorithms.size(); ++ai)
      for (int f = 0; f < cfg.n_functions; ++f)
        for (int ic = 0; ic < cfg.n_initial_conditions; ++ic) tasks.push_back({ki, ai, f, ic});

  SweepResult result;
  for (std::size_t ki = 0; ki < cfg.kappas.size(); ++ki) {
    for (const auto& alg : cfg.algorithms) {
      const auto rep = rk4_stability_check(alg.resolve(cfg.kappas[ki]), cfg.kappas[ki], cfg.sim.dt);
      if (!rep.ok) {
        result.warnings.push_back("RK4 with dt=" + format_double(cfg.sim.dt) + " is unstable for " + alg.label() +
                                  " at kappa=" + format_double(cfg.kappas[ki]) + " (|R| up to " +
                                  format_double(rep.worst_amplification) + ")");
      }
    }
  }

  result.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.threads));
  auto worker = [&](std::size_t id) {
    try {
      for (std::size_t i = next++; i < tasks.size(); i = next++) {
        const Task& t = tasks[i];
        result.runs[i] = run_single(cfg, t.kappa_index, t.algorithm_index, t.function_id, t.ic_id);
      }
    } catch (...) {
      errors[id] = std::current_exception();
      next = tasks.size();
    }
  };
  if (cfg.threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < cfg.threads; ++i) pool.emplace_back(worker, static_cast<std::size_t>(i));
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Tasks were enumerated in (kappa, algorithm, function, ic) order already.
  for (std::size_t ki = 0; ki < cfg.kappas.size(); ++ki) {
    for (std::size_t ai = 0; ai < cfg.algorithms.size(); ++ai) {
      std::vector<RateEstimate> ests;
      std::size_t excluded = 0;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].kappa_index != ki || tasks[i].algorithm_index != ai) continue;
        const RunRecord& r = result.runs[i];
        if (!r.usable()) {
          ++excluded;
          continue;
        }
        RateEstimate e;
        e.rho_sim = r.rho_sim;
        e.c_sim = r.c_sim;
        ests.push_back(e);
      }
      const std::string& label = cfg.algorithms[ai].label();
      if (ests.empty()) {
        result.warnings.push_back("no usable runs for " + label + " at kappa=" + format_double(cfg.kappas[ki]));
        continue;
      }
      SweepSummary s = aggregate(ests, cfg.kappas[ki], label);
      s.n_excluded = excluded;
      if (excluded > 0) {
        result.warnings.push_back(std::to_string(excluded) + " run(s) excluded for " + label +
                                  " at kappa=" + format_double(cfg.kappas[ki]));
      }
      result.summaries.push_back(std::move(s));
    }
  }
  return result;
}

inline constexpr const char* kRunsHeader = "kappa,algorithm,function_id,ic_id,rho_sim,c_sim,t_end,terminated_by";
inline constexpr const char* kSummaryHeader = "kappa,algorithm,n_runs,mean_rho,std_rho,mean_c,std_c";
inline constexpr const char* kTheoryHeader = "kappa,inv_kappa,inv_sqrt_kappa,inv_cbrt_kappa";

inline void write_runs_csv(std::ostream& os, const std::vector<RunRecord>& runs) {
  os << kRunsHeader << '\n';
  for (const auto& r : runs) {
    os << format_double(r.kappa) << ',' << r.algorithm << ',' << r.function_id << ',' << r.ic_id << ','
       << format_double(r.rho_sim) << ',' << format_double(r.c_sim) << ',' << format_double(r.t_end) << ','
       << to_string(r.terminated_by) << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, const std::vector<SweepSummary>& summaries) {
  os << kSummaryHeader << '\n';
  for (const auto& s : summaries) {
    os << format_double(s.kappa) << ',' << s.algorithm << ',' << s.n_runs << ',' << format_double(s.mean_rho) << ','
       << format_double(s.std_rho) << ',' << format_double(s.mean_c) << ',' << format_double(s.std_c) << '\n';
  }
}

/// Reference rates 1/kappa, 1/sqrt(kappa), kappa^(-1/3) at each distinct kappa.
inline void write_theory_csv(std::ostream& os, const std::vector<SweepSummary>& summaries) {
  os << kTheoryHeader << '\n';
  std::vector<double> kappas;
  for (const auto& s : summaries)
    if (std::find(kappas.begin(), kappas.end(), s.kappa) == kappas.end()) kappas.push_back(s.kappa);
  for (double k : kappas) {
    os << format_double(k) << ',' << format_double(1.0 / k) << ',' << format_double(1.0 / std::sqrt(k)) << ','
       << format_double(1.0 / std::cbrt(k)) << '\n';
  }
}

struct PlotFiles {
  std::filesystem::path summary, runs, theory;
};

/// Writes summary.csv, runs.csv and theory.csv into output_dir (created if needed).
inline PlotFiles emit_plot_data(const std::vector<SweepSummary>& summaries, const std::vector<RunRecord>& runs,
                                const std::filesystem::path& output_dir) {
  if (summaries.empty()) throw InvalidInput("nothing to emit: no summaries");
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + output_dir.string() + ": " + ec.message());
  PlotFiles files{output_dir / "summary.csv", output_dir / "runs.csv", output_dir / "theory.csv"};
  auto open = [](const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
  };
  {
    auto os = open(files.summary);
    write_summary_csv(os, summaries);
  }
  {
    auto os = open(files.runs);
    write_runs_csv(os, runs);
  }
  {
    auto os = open(files.theory);
    write_theory_csv(os, summaries);
  }
  return files;
}

inline Termination termination_from_string(const std::string& s) {
  if (s == "tolerance-reached") return Termination::tolerance_reached;
  if (s == "t-max-reached") return Termination::t_max_reached;
  if (s == "divergence") return Termination::divergence;
  throw InvalidInput("unknown termination '" + s + "'");
}

inline std::vector<RunRecord> read_runs_csv(std::istream& is) {
  const CsvTable t = read_csv(is);
  if (t.header != split_csv_line(kRunsHeader)) throw InvalidInput("unexpected runs header");
  std::vector<RunRecord> out;
  for (const auto& r : t.rows) {
    RunRecord rec;
    rec.kappa = parse_double(r[0]);
    rec.algorithm = r[1];
    rec.function_id = std::stoi(r[2]);
    rec.ic_id = std::stoi(r[3]);
    rec.rho_sim = parse_double(r[4]);
    rec.c_sim = parse_double(r[5]);
    rec.t_end = parse_double(r[6]);
    rec.terminated_by = termination_from_string(r[7]);
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<SweepSummary> read_summary_csv(std::istream& is) {
  const CsvTable t = read_csv(is);
  if (t.header != split_csv_line(kSummaryHeader)) throw InvalidInput("unexpected summary header");
  std::vector<SweepSummary> out;
  for (const auto& r : t.rows) {
    SweepSummary s;
    s.kappa = parse_double(r[0]);
    s.algorithm = r[1];
    s.n_runs = static_cast<std::size_t>(std::stoull(r[2]));
    s.mean_rho = parse_double(r[3]);
    s.std_rho = parse_double(r[4]);
    s.mean_c = parse_double(r[5]);
    s.std_c = parse_double(r[6]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace ctopt
