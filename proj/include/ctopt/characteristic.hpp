#pragma once

// Characteristic polynomial of an algorithm on one curvature component and
// the worst-case local rate over the admissible curvature range.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "ctopt/algorithm_spec.hpp"
#include "ctopt/errors.hpp"
#include "ctopt/polynomial.hpp"

namespace ctopt {

inline constexpr int kDefaultLambdaGrid = 400;

/// s^k + (g_{k-1} + h_{k-1} l) s^{k-1} + ... + (g_1 + h_1 l) s + l, for l = lambda_f.
inline Polynomial char_poly(const AlgorithmSpec& spec, double lambda_f) {
  if (!(lambda_f > 0.0 && lambda_f <= 1.0)) throw DomainError("lambda_f must lie in (0, 1]");
  const int k = spec.order();
  std::vector<double> c(static_cast<std::size_t>(k + 1));
  c[0] = lambda_f;
  for (int j = 1; j < k; ++j) c[static_cast<std::size_t>(j)] = spec.g(j) + spec.h(j) * lambda_f;
  c[static_cast<std::size_t>(k)] = 1.0;
  return Polynomial(std::move(c));
}

/// Uniform grid on [1/kappa, 1] with both endpoints.
inline std::vector<double> lambda_grid(double kappa, int grid_size = kDefaultLambdaGrid) {
  if (!(kappa >= 1.0)) throw DomainError("kappa must be >= 1");
  if (grid_size < 2) throw InvalidInput("lambda grid needs at least two points");
  std::vector<double> out(static_cast<std::size_t>(grid_size));
  const double lo = 1.0 / kappa;
  for (int i = 0; i < grid_size; ++i) {
    out[static_cast<std::size_t>(i)] = lo + (1.0 - lo) * static_cast<double>(i) / static_cast<double>(grid_size - 1);
  }
  out.back() = 1.0;
  return out;
}

/// Largest real part over all roots of char_poly(spec, lambda_f).
inline double spectral_abscissa(const AlgorithmSpec& spec, double lambda_f) {
  return find_roots(char_poly(spec, lambda_f)).max_real_part();
}

/**
 * rho = -max over the lambda grid of the spectral abscissa. Positive iff the
 * algorithm is locally stable for every grid curvature.
 */
inline double worst_rate(const AlgorithmSpec& spec, double kappa, int grid_size = kDefaultLambdaGrid) {
  double worst = -std::numeric_limits<double>::infinity();
  for (double lf : lambda_grid(kappa, grid_size)) worst = std::max(worst, spectral_abscissa(spec, lf));
  return -worst;
}

}  // namespace ctopt
