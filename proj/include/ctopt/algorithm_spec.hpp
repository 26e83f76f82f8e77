#pragma once

/**
 * @file algorithm_spec.hpp
 * @brief Normalized k-th order continuous-time algorithms
 *
 *   x^(k) = -g_{k-1} x^(k-1) - ... - g_1 x'
 *           - grad f(x + h_1 x' + ... + h_{k-1} x^(k-1)) / L
 *
 * in units where L = 1 and the gradient gain g_0 = 1/L is fixed to one.
 */

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctopt/errors.hpp"

namespace ctopt {

class AlgorithmSpec {
 public:
  /// g[j-1] holds g_j and h[j-1] holds h_j for j = 1..k-1.
  AlgorithmSpec(int order, std::vector<double> g, std::vector<double> h, std::string label = {})
      : order_(order), g_(std::move(g)), h_(std::move(h)), label_(std::move(label)) {
    if (order_ < 1) throw InvalidInput("algorithm order must be >= 1");
    const auto expected = static_cast<std::size_t>(order_ - 1);
    if (g_.size() != expected || h_.size() != expected)
      throw InvalidInput("algorithm of order k needs k-1 coefficients in both g and h");
    for (std::size_t j = 0; j < expected; ++j) {
      if (!std::isfinite(g_[j]) || !std::isfinite(h_[j]))
        throw InvalidInput("algorithm coefficients must be finite");
    }
    if (label_.empty()) label_ = "custom:" + std::to_string(order_);
  }

  [[nodiscard]] int order() const { return order_; }
  [[nodiscard]] const std::vector<double>& g() const { return g_; }
  [[nodiscard]] const std::vector<double>& h() const { return h_; }
  [[nodiscard]] const std::string& label() const { return label_; }

  /// g_j for 1 <= j <= k-1.
  [[nodiscard]] double g(int j) const { return g_.at(static_cast<std::size_t>(j - 1)); }
  /// h_j for 1 <= j <= k-1.
  [[nodiscard]] double h(int j) const { return h_.at(static_cast<std::size_t>(j - 1)); }

  friend bool operator==(const AlgorithmSpec&, const AlgorithmSpec&) = default;

 private:
  int order_;
  std::vector<double> g_;
  std::vector<double> h_;
  std::string label_;
};

/// x' = -grad f(x).
inline AlgorithmSpec gradient_flow() { return AlgorithmSpec(1, {}, {}, "gradient_flow"); }

/// x'' = -2 x' / sqrt(kappa) - grad f(x).
inline AlgorithmSpec heavy_ball(double kappa) {
  if (!(kappa >= 1.0)) throw DomainError("heavy_ball needs kappa >= 1");
  return AlgorithmSpec(2, {2.0 / std::sqrt(kappa)}, {0.0}, "heavy_ball");
}

namespace detail {
inline double binomial(int n, int r) {
  double out = 1.0;
  for (int i = 1; i <= r; ++i) out = out * static_cast<double>(n - r + i) / static_cast<double>(i);
  return out;
}
}  // namespace detail

/**
 * Order-k algorithm with rate kappa^(-1/k) on quadratics:
 *   h_j = kappa^(j/k) C(k-1, j),   g_j = kappa^(-(k-j)/k) C(k, j) - h_j / kappa.
 * Its characteristic polynomial factors as
 *   (s + kappa^(-1/k))^(k-1) (s + kappa^(-1/k) + (lambda_f - 1/kappa) kappa^((k-1)/k)).
 */
inline AlgorithmSpec fast_kth(int k, double kappa) {
  if (k < 1) throw DomainError("fast_kth needs k >= 1");
  if (!(kappa >= 1.0)) throw DomainError("fast_kth needs kappa >= 1");
  if (k == 1) return gradient_flow();
  std::vector<double> g(static_cast<std::size_t>(k - 1));
  std::vector<double> h(static_cast<std::size_t>(k - 1));
  const double kd = static_cast<double>(k);
  for (int j = 1; j < k; ++j) {
    const double hj = std::pow(kappa, j / kd) * detail::binomial(k - 1, j);
    h[static_cast<std::size_t>(j - 1)] = hj;
    g[static_cast<std::size_t>(j - 1)] = std::pow(kappa, -(k - j) / kd) * detail::binomial(k, j) - hj / kappa;
  }
  return AlgorithmSpec(k, std::move(g), std::move(h), "fast_kth:" + std::to_string(k));
}

/**
 * Resolve a named descriptor at a given condition number:
 * "gradient_flow", "heavy_ball" or "fast_kth:<k>".
 */
inline AlgorithmSpec algorithm_from_name(const std::string& name, double kappa) {
  if (name == "gradient_flow") return gradient_flow();
  if (name == "heavy_ball") return heavy_ball(kappa);
  const std::string prefix = "fast_kth:";
  if (name.rfind(prefix, 0) == 0) {
    const std::string digits = name.substr(prefix.size());
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (digits.empty() || used != digits.size()) throw InvalidInput("bad fast_kth order in '" + name + "'");
    return fast_kth(k, kappa);
  }
  throw InvalidInput("unknown algorithm '" + name + "'");
}

inline void to_json(nlohmann::json& j, const AlgorithmSpec& spec) {
  j = nlohmann::json{{"k", spec.order()}, {"g", spec.g()}, {"h", spec.h()}, {"label", spec.label()}};
}

inline AlgorithmSpec algorithm_from_json(const nlohmann::json& j) {
  try {
    return AlgorithmSpec(j.at("k").get<int>(), j.value("g", std::vector<double>{}),
                         j.value("h", std::vector<double>{}), j.value("label", std::string{}));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad algorithm spec: ") + e.what());
  }
}

}  // namespace ctopt
