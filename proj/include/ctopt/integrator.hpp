#pragma once

/**
 * @file integrator.hpp
 * @brief Classical fixed-step RK4 simulation of the algorithm dynamics.
 */

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctopt/algorithm_spec.hpp"
#include "ctopt/characteristic.hpp"
#include "ctopt/csv.hpp"
#include "ctopt/errors.hpp"
#include "ctopt/vector_field.hpp"

namespace ctopt {

enum class Termination { tolerance_reached, t_max_reached, divergence };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::tolerance_reached: return "tolerance-reached";
    case Termination::t_max_reached: return "t-max-reached";
    case Termination::divergence: return "divergence";
  }
  return "unknown";
}

inline constexpr double kDivergenceNorm = 1e12;

struct SimConfig {
  double dt = 0.01;
  double tol = 1e-8;
  double t_max = 1e5;
  int record_stride = 10;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive");
    if (!(tol > 0.0)) throw InvalidInput("tol must be positive");
    if (!(t_max > dt)) throw InvalidInput("t_max must exceed dt");
    if (record_stride < 1) throw InvalidInput("record_stride must be >= 1");
  }
};

/**
 * Samples every record_stride steps starting at t = 0, so times are
 * uniformly spaced. The state at termination is kept separately in
 * t_end / z_end since it generally falls between two samples.
 */
struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  Termination terminated_by = Termination::t_max_reached;
  double t_end = 0.0;
  std::vector<double> z_end;
};

inline double euclidean_norm(std::span<const double> z) {
  double acc = 0.0;
  for (double v : z) acc += v * v;
  return std::sqrt(acc);
}

/// Reusable RK4 stage buffers.
class Rk4Workspace {
 public:
  explicit Rk4Workspace(std::size_t size) : k1_(size), k2_(size), k3_(size), k4_(size), tmp_(size) {}

  /// In-place classical RK4 update of z. Throws DivergenceError on non-finite stages.
  template <class Field>
  void step(const Field& field, std::span<double> z, double dt) {
    const std::size_t n = z.size();
    if (k1_.size() != n) throw InvalidInput("workspace size mismatch");
    field(std::span<const double>(z), std::span<double>(k1_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = z[i] + 0.5 * dt * k1_[i];
    field(std::span<const double>(tmp_), std::span<double>(k2_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = z[i] + 0.5 * dt * k2_[i];
    field(std::span<const double>(tmp_), std::span<double>(k3_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = z[i] + dt * k3_[i];
    field(std::span<const double>(tmp_), std::span<double>(k4_));
    for (std::size_t i = 0; i < n; ++i) {
      z[i] += dt / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
      if (!std::isfinite(z[i])) throw DivergenceError("non-finite state in RK4 step");
    }
  }

 private:
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

template <class Field>
std::vector<double> rk4_step(const Field& field, std::span<const double> z, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  std::vector<double> out(z.begin(), z.end());
  Rk4Workspace ws(out.size());
  ws.step(field, std::span<double>(out), dt);
  return out;
}

/**
 * Integrate from z0 until |z| <= tol, t >= t_max or divergence
 * (|z| > 1e12 or non-finite). Divergence is reported in the trajectory,
 * not thrown.
 */
template <Objective F>
Trajectory simulate(const AlgorithmSpec& spec, const F& objective, std::span<const double> z0,
                    const SimConfig& cfg = {}, std::size_t dimension = 1) {
  cfg.validate();
  const VectorField<F> field(spec, objective, dimension);
  if (z0.size() != field.state_size()) throw InvalidInput("initial state has the wrong dimension");

  Trajectory traj;
  std::vector<double> z(z0.begin(), z0.end());
  traj.times.push_back(0.0);
  traj.states.push_back(z);

  auto finish = [&](Termination why, double t) {
    traj.terminated_by = why;
    traj.t_end = t;
    traj.z_end = z;
    return traj;
  };

  double norm = euclidean_norm(z);
  if (!std::isfinite(norm)) return finish(Termination::divergence, 0.0);
  if (norm <= cfg.tol) return finish(Termination::tolerance_reached, 0.0);

  Rk4Workspace ws(z.size());
  const auto max_steps = static_cast<std::uint64_t>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
  for (std::uint64_t step = 1; step <= max_steps; ++step) {
    const double t = static_cast<double>(step) * cfg.dt;
    try {
      ws.step(field, std::span<double>(z), cfg.dt);
    } catch (const DivergenceError&) {
      return finish(Termination::divergence, t);
    }
    norm = euclidean_norm(z);
    if (step % static_cast<std::uint64_t>(cfg.record_stride) == 0) {
      traj.times.push_back(t);
      traj.states.push_back(z);
    }
    if (!(norm <= kDivergenceNorm)) return finish(Termination::divergence, t);
    if (norm <= cfg.tol) return finish(Termination::tolerance_reached, t);
  }
  return finish(Termination::t_max_reached, static_cast<double>(max_steps) * cfg.dt);
}

/// Stability polynomial of classical RK4 on the test equation y' = w y / dt.
inline std::complex<double> rk4_amplification(std::complex<double> w) {
  return 1.0 + w * (1.0 + w * (0.5 + w * (1.0 / 6.0 + w / 24.0)));
}

struct Rk4StabilityReport {
  bool ok = true;
  std::complex<double> worst{};  ///< dt * s with the largest |R|
  double worst_amplification = 0.0;
};

/**
 * Evaluate R(dt s) over the roots s of every char_poly on the lambda grid.
 * ok iff all |R| < 1, i.e. every linearized mode decays under the scheme.
 */
inline Rk4StabilityReport rk4_stability_check(const AlgorithmSpec& spec, double kappa, double dt,
                                              int grid_size = kDefaultLambdaGrid) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  Rk4StabilityReport report;
  report.worst_amplification = -1.0;
  for (double lf : lambda_grid(kappa, grid_size)) {
    for (const Complex& s : find_roots(char_poly(spec, lf)).roots) {
      const Complex w = dt * s;
      const double amp = std::abs(rk4_amplification(w));
      if (amp > report.worst_amplification) {
        report.worst_amplification = amp;
        report.worst = w;
      }
    }
  }
  report.ok = report.worst_amplification < 1.0;
  return report;
}

/// CSV with columns t, z_1, ..., z_m; the terminal state is the last row.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const std::size_t m = traj.states.empty() ? traj.z_end.size() : traj.states.front().size();
  os << "t";
  for (std::size_t i = 1; i <= m; ++i) os << ",z_" << i;
  os << '\n';
  for (std::size_t r = 0; r < traj.times.size(); ++r) {
    os << format_double(traj.times[r]);
    for (double v : traj.states[r]) os << ',' << format_double(v);
    os << '\n';
  }
  if (!traj.z_end.empty() && (traj.times.empty() || traj.t_end > traj.times.back())) {
    os << format_double(traj.t_end);
    for (double v : traj.z_end) os << ',' << format_double(v);
    os << '\n';
  }
}

}  // namespace ctopt
