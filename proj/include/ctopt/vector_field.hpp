#pragma once

// Right-hand side of the nonlinear algorithm dynamics and its linearization.

#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ctopt/algorithm_spec.hpp"
#include "ctopt/characteristic.hpp"
#include "ctopt/errors.hpp"

namespace ctopt {

/// Anything that can write its gradient at x into out (same length as x).
template <class F>
concept Objective = requires(const F& f, std::span<const double> x, std::span<double> out) {
  f.gradient(x, out);
};

/**
 * State z = (x, x', ..., x^(k-1)) is stored component-major: z[j * n + i]
 * is the i-th coordinate of the j-th derivative.
 *
 * The objective is held by reference and must outlive the field.
 */
template <Objective F>
class VectorField {
 public:
  VectorField(AlgorithmSpec spec, const F& objective, std::size_t dimension = 1)
      : spec_(std::move(spec)), objective_(&objective), n_(dimension) {
    if (n_ == 0) throw InvalidInput("spatial dimension must be >= 1");
  }

  [[nodiscard]] const AlgorithmSpec& spec() const { return spec_; }
  [[nodiscard]] const F& objective() const { return *objective_; }
  [[nodiscard]] std::size_t dimension() const { return n_; }
  [[nodiscard]] std::size_t state_size() const { return static_cast<std::size_t>(spec_.order()) * n_; }

  /// zdot = f(z). Allocation-free given correctly sized buffers.
  void operator()(std::span<const double> z, std::span<double> zdot) const {
    const std::size_t size = state_size();
    if (z.size() != size || zdot.size() != size) throw InvalidInput("state dimension mismatch");
    const int k = spec_.order();
    const std::size_t last = size - n_;

    probe_.resize(n_);
    grad_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) probe_[i] = z[i];
    for (int j = 1; j < k; ++j) {
      const double hj = spec_.h(j);
      if (hj == 0.0) continue;
      for (std::size_t i = 0; i < n_; ++i) probe_[i] += hj * z[static_cast<std::size_t>(j) * n_ + i];
    }
    objective_->gradient(probe_, grad_);

    for (std::size_t i = 0; i < last; ++i) zdot[i] = z[i + n_];
    for (std::size_t i = 0; i < n_; ++i) {
      double acc = -grad_[i];
      for (int j = 1; j < k; ++j) acc -= spec_.g(j) * z[static_cast<std::size_t>(j) * n_ + i];
      zdot[last + i] = acc;
    }
  }

 private:
  AlgorithmSpec spec_;
  const F* objective_;
  std::size_t n_;
  // Scratch space; a field therefore belongs to one thread at a time.
  mutable std::vector<double> probe_;
  mutable std::vector<double> grad_;
};

template <Objective F>
std::vector<double> eval_field(const VectorField<F>& vf, std::span<const double> z) {
  std::vector<double> out(vf.state_size());
  if (z.size() != out.size()) throw InvalidInput("state dimension mismatch");
  vf(z, out);
  return out;
}

/// Companion matrix of char_poly(spec, lambda_f) for one curvature component.
inline Eigen::MatrixXd linearized_matrix(const AlgorithmSpec& spec, double lambda_f) {
  const Polynomial p = char_poly(spec, lambda_f);
  const int k = spec.order();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  for (int r = 0; r + 1 < k; ++r) a(r, r + 1) = 1.0;
  for (int c = 0; c < k; ++c) a(k - 1, c) = -p[static_cast<std::size_t>(c)];
  return a;
}

}  // namespace ctopt
