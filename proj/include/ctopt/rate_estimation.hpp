#pragma once

/**
 * @file rate_estimation.hpp
 * @brief Fitting |z(t)| <= c |z(0)| exp(-rho t) to simulated trajectories.
 *
 * Two stages: an unweighted least-squares fit of ln(|z(t)| / |z(0)|)
 * against t over t > t_min gives rho, then c is the smallest constant for
 * which the envelope holds at every recorded sample.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ctopt/errors.hpp"
#include "ctopt/integrator.hpp"

namespace ctopt {

inline constexpr double kDefaultFitStart = 10.0;
inline constexpr std::size_t kMinFitSamples = 10;

struct RateEstimate {
  double rho_sim = 0.0;
  double c_sim = 1.0;
  double ln_c_fit = 0.0;
  double rms_residual = 0.0;
  double t_fit_start = kDefaultFitStart;
  std::size_t fit_samples = 0;
  /// True when too few samples followed t_min and the window was moved to t_end / 2.
  bool fallback_window = false;
};

namespace detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};

inline LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericalError("degenerate fit window");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

}  // namespace detail

/// Estimate from sample times and state norms; norms[0] is |z(0)|.
inline RateEstimate estimate_rate(std::span<const double> times, std::span<const double> norms,
                                  double t_min = kDefaultFitStart) {
  if (times.size() != norms.size() || times.empty()) throw InvalidInput("times and norms must match");
  const double z0 = norms.front();
  if (!(z0 > 0.0)) throw NumericalError("cannot estimate a rate from a zero initial state");

  auto collect = [&](double start, std::vector<double>& ts, std::vector<double>& ls) {
    ts.clear();
    ls.clear();
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] > start && norms[i] > 0.0) {
        ts.push_back(times[i]);
        ls.push_back(std::log(norms[i] / z0));
      }
    }
  };

  RateEstimate est;
  est.t_fit_start = t_min;
  std::vector<double> ts, ls;
  collect(t_min, ts, ls);
  if (ts.size() < kMinFitSamples) {
    est.fallback_window = true;
    est.t_fit_start = 0.5 * times.back();
    collect(est.t_fit_start, ts, ls);
  }
  if (ts.size() < 3) throw NumericalError("too few samples to estimate a rate");

  const detail::LineFit fit = detail::least_squares_line(ts, ls);
  est.rho_sim = -fit.slope;
  est.ln_c_fit = fit.intercept;
  est.rms_residual = fit.rms;
  est.fit_samples = ts.size();

  double c = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    c = std::max(c, norms[i] / z0 * std::exp(est.rho_sim * times[i]));
  }
  est.c_sim = c;
  return est;
}

inline RateEstimate estimate_rate(const Trajectory& traj, double t_min = kDefaultFitStart) {
  std::vector<double> norms(traj.states.size());
  for (std::size_t i = 0; i < norms.size(); ++i) norms[i] = euclidean_norm(traj.states[i]);
  return estimate_rate(traj.times, norms, t_min);
}

struct SweepSummary {
  double kappa = 0.0;
  std::string algorithm;
  std::size_t n_runs = 0;
  double mean_rho = 0.0;
  double std_rho = 0.0;
  double mean_c = 0.0;
  double std_c = 0.0;
  /// Runs left out of the statistics (divergence or failed fit).
  std::size_t n_excluded = 0;

  [[nodiscard]] double rho_lower_2sigma() const { return mean_rho - 2.0 * std_rho; }
  [[nodiscard]] double rho_upper_2sigma() const { return mean_rho + 2.0 * std_rho; }
  [[nodiscard]] double c_upper_2sigma() const { return mean_c + 2.0 * std_c; }
};

/// Sample mean and (n-1) standard deviation of rho_sim and c_sim.
inline SweepSummary aggregate(std::span<const RateEstimate> estimates, double kappa, std::string label) {
  if (estimates.empty()) throw InvalidInput("cannot aggregate an empty set of estimates");
  SweepSummary s;
  s.kappa = kappa;
  s.algorithm = std::move(label);
  s.n_runs = estimates.size();
  const auto n = static_cast<double>(estimates.size());
  for (const auto& e : estimates) {
    s.mean_rho += e.rho_sim;
    s.mean_c += e.c_sim;
  }
  s.mean_rho /= n;
  s.mean_c /= n;
  if (estimates.size() > 1) {
    double vr = 0.0, vc = 0.0;
    for (const auto& e : estimates) {
      vr += (e.rho_sim - s.mean_rho) * (e.rho_sim - s.mean_rho);
      vc += (e.c_sim - s.mean_c) * (e.c_sim - s.mean_c);
    }
    s.std_rho = std::sqrt(vr / (n - 1.0));
    s.std_c = std::sqrt(vc / (n - 1.0));
  }
  return s;
}

}  // namespace ctopt
