#pragma once

/**
 * @file polynomial.hpp
 * @brief Real-coefficient polynomials, complex root finding and interval families.
 *
 * Coefficients are stored in ascending degree order everywhere in this
 * library: coeffs[0] is the constant term, coeffs.back() the leading one.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctopt/errors.hpp"

namespace ctopt {

using Complex = std::complex<double>;

class Polynomial {
 public:
  /// The zero polynomial.
  Polynomial() : coeffs_{0.0} {}

  /// Ascending-order coefficients; trailing zeros are trimmed.
  explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    for (double c : coeffs_) {
      if (!std::isfinite(c)) throw InvalidInput("polynomial coefficients must be finite");
    }
    while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
    if (coeffs_.empty()) coeffs_.push_back(0.0);
  }

  Polynomial(std::initializer_list<double> coeffs) : Polynomial(std::vector<double>(coeffs)) {}

  /// Real polynomial lead * prod (s - r). Roots must be closed under conjugation.
  static Polynomial from_roots(std::span<const Complex> roots, double lead = 1.0) {
    std::vector<Complex> acc{Complex{1.0}};
    for (const Complex& r : roots) {
      std::vector<Complex> next(acc.size() + 1, Complex{});
      for (std::size_t i = 0; i < acc.size(); ++i) {
        next[i + 1] += acc[i];
        next[i] -= r * acc[i];
      }
      acc = std::move(next);
    }
    std::vector<double> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = lead * acc[i].real();
    return Polynomial(std::move(out));
  }

  [[nodiscard]] int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  [[nodiscard]] bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }
  [[nodiscard]] const std::vector<double>& coeffs() const { return coeffs_; }
  [[nodiscard]] double leading() const { return coeffs_.back(); }

  /// Coefficient of s^i; zero beyond the degree.
  [[nodiscard]] double operator[](std::size_t i) const {
    return i < coeffs_.size() ? coeffs_[i] : 0.0;
  }

  [[nodiscard]] double max_abs_coeff() const {
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  template <class T>
  [[nodiscard]] T operator()(const T& s) const {
    T acc{coeffs_.back()};
    for (std::size_t i = coeffs_.size() - 1; i-- > 0;) acc = acc * s + T{coeffs_[i]};
    return acc;
  }

  [[nodiscard]] Polynomial derivative() const {
    if (coeffs_.size() == 1) return Polynomial{};
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = static_cast<double>(i) * coeffs_[i];
    return Polynomial(std::move(d));
  }

  [[nodiscard]] Polynomial monic() const {
    if (is_zero()) throw InvalidInput("zero polynomial has no monic form");
    std::vector<double> c = coeffs_;
    const double lead = c.back();
    for (double& x : c) x /= lead;
    c.back() = 1.0;
    return Polynomial(std::move(c));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
    return Polynomial(std::move(c));
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
      for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Polynomial(std::move(c));
  }

  friend Polynomial operator*(double s, const Polynomial& p) {
    std::vector<double> c = p.coeffs_;
    for (double& x : c) x *= s;
    return Polynomial(std::move(c));
  }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

 private:
  std::vector<double> coeffs_;
};

/// Quotient and remainder of long division, num = q * den + r.
inline std::pair<Polynomial, Polynomial> divmod(const Polynomial& num, const Polynomial& den) {
  if (den.is_zero()) throw InvalidInput("division by the zero polynomial");
  const int dn = den.degree();
  if (num.degree() < dn) return {Polynomial{}, num};
  std::vector<double> rem = num.coeffs();
  std::vector<double> quot(static_cast<std::size_t>(num.degree() - dn + 1), 0.0);
  for (int i = num.degree() - dn; i >= 0; --i) {
    const double q = rem[static_cast<std::size_t>(i + dn)] / den.leading();
    quot[static_cast<std::size_t>(i)] = q;
    for (int j = 0; j <= dn; ++j) rem[static_cast<std::size_t>(i + j)] -= q * den[static_cast<std::size_t>(j)];
  }
  rem.resize(static_cast<std::size_t>(std::max(dn, 1)));
  return {Polynomial(std::move(quot)), Polynomial(std::move(rem))};
}

/// Complex roots of a polynomial, each listed once per multiplicity.
struct RootSet {
  std::vector<Complex> roots;

  [[nodiscard]] std::size_t size() const { return roots.size(); }
  [[nodiscard]] bool empty() const { return roots.empty(); }

  [[nodiscard]] double max_real_part() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const Complex& r : roots) m = std::max(m, r.real());
    return m;
  }

  [[nodiscard]] double min_abs() const {
    double m = std::numeric_limits<double>::infinity();
    for (const Complex& r : roots) m = std::min(m, std::abs(r));
    return m;
  }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (const Complex& r : roots) m = std::max(m, std::abs(r));
    return m;
  }
};

namespace detail {

// Rounding-level bound for evaluating p at z by Horner's rule.
inline double horner_error_bound(const Polynomial& p, Complex z) {
  const double az = std::abs(z);
  double acc = 0.0;
  for (std::size_t i = p.coeffs().size(); i-- > 0;) acc = acc * az + std::abs(p.coeffs()[i]);
  return 8.0 * static_cast<double>(p.coeffs().size()) * std::numeric_limits<double>::epsilon() * acc;
}

inline void horner_with_derivative(const Polynomial& p, Complex z, Complex& value, Complex& deriv) {
  const auto& c = p.coeffs();
  value = c.back();
  deriv = 0.0;
  for (std::size_t i = c.size() - 1; i-- > 0;) {
    deriv = deriv * z + value;
    value = value * z + c[i];
  }
}

// Single-link groups of indices whose members lie within tol relative distance.
inline std::vector<std::vector<std::size_t>> link_groups(const std::vector<Complex>& z,
                                                         const std::vector<std::size_t>& idx, double tol) {
  const std::size_t n = idx.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const Complex a = z[idx[i]], b = z[idx[j]];
      if (std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b))) parent[find(i)] = find(j);
    }
  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(idx[i]);
  std::erase_if(groups, [](const auto& g) { return g.empty(); });
  return groups;
}

// Centroid of the group, polished as a simple root of p^(m-1), if it is a
// root of p to rounding accuracy.
inline std::optional<Complex> cluster_root(const Polynomial& p, const std::vector<Complex>& z,
                                           const std::vector<std::size_t>& g) {
  Complex centre{};
  for (std::size_t i : g) centre += z[i];
  centre /= static_cast<double>(g.size());
  double spread = 0.0;
  for (std::size_t i : g) spread = std::max(spread, std::abs(z[i] - centre));
  // A cluster straddling the real axis is a real multiple root.
  if (std::abs(centre.imag()) <= spread) centre.imag(0.0);

  Polynomial d = p;
  for (std::size_t m = 1; m < g.size(); ++m) d = d.derivative();
  Complex polished = centre;
  for (int it = 0; it < 20; ++it) {
    Complex value, deriv;
    horner_with_derivative(d, polished, value, deriv);
    if (deriv == Complex{}) break;
    const Complex step = value / deriv;
    polished -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(polished)) break;
  }
  const double reach = std::max(spread, 1e-3 * std::abs(centre));
  if (std::isfinite(polished.real()) && std::isfinite(polished.imag()) && std::abs(polished - centre) <= reach &&
      std::abs(p(polished)) <= std::max(std::abs(p(centre)), 8.0 * horner_error_bound(p, polished))) {
    centre = polished;
  }
  if (std::abs(p(centre)) <= horner_error_bound(p, centre)) return centre;
  return std::nullopt;
}

// Replace tight clusters by a single multiple root. Simultaneous iteration
// only resolves an m-fold root to about eps^(1/m), while the cluster mean is
// accurate to about eps. Groups are formed coarse to fine: a group whose
// centroid is not a root is split again at a tighter tolerance.
inline void merge_clusters(const Polynomial& p, std::vector<Complex>& z) {
  constexpr double kCoarseTol = 1e-2;
  constexpr double kFinestTol = 1e-6;
  std::vector<std::size_t> all(z.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::pair<std::vector<std::size_t>, double>> work{{all, kCoarseTol}};
  while (!work.empty()) {
    auto [idx, tol] = std::move(work.back());
    work.pop_back();
    for (auto& g : link_groups(z, idx, tol)) {
      if (g.size() < 2) continue;
      if (const auto root = cluster_root(p, z, g)) {
        for (std::size_t i : g) z[i] = *root;
      } else if (tol > kFinestTol) {
        work.emplace_back(std::move(g), tol / 10.0);
      }
    }
  }
}

// Make the multiset exactly closed under conjugation.
inline void symmetrize(std::vector<Complex>& z) {
  constexpr double kPairTol = 1e-7;
  std::vector<Complex> upper, lower, out;
  for (const Complex& r : z) {
    if (std::abs(r.imag()) <= kPairTol * std::max(1.0, std::abs(r))) {
      out.emplace_back(r.real(), 0.0);
    } else if (r.imag() > 0) {
      upper.push_back(r);
    } else {
      lower.push_back(r);
    }
  }
  std::vector<bool> used(lower.size(), false);
  for (const Complex& u : upper) {
    std::size_t best = lower.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < lower.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(u - std::conj(lower[j]));
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best == lower.size()) {
      out.push_back(u);
      continue;
    }
    used[best] = true;
    const Complex m = 0.5 * (u + std::conj(lower[best]));
    out.push_back(m);
    out.push_back(std::conj(m));
  }
  for (std::size_t j = 0; j < lower.size(); ++j)
    if (!used[j]) out.push_back(lower[j]);
  z = std::move(out);
}

}  // namespace detail

/**
 * All complex roots of p, via Aberth-Ehrlich simultaneous iteration.
 *
 * Starting points lie on a circle of radius 1 + max|a_i| (monic
 * coefficients) with a fixed-seed angular perturbation, so results are
 * reproducible. Near-coincident roots are replaced by their centroid when
 * that is a root to rounding accuracy, and the result is made exactly
 * conjugate-closed. Roots are returned sorted by (real, imag).
 *
 * Throws InvalidInput for degree < 1 and NumericalError when a returned
 * root fails |p(r)| / (1 + |r|^n) <= 1e-8 * max|coeffs|.
 */
inline RootSet find_roots(const Polynomial& p) {
  if (p.degree() < 1) throw InvalidInput("root finding needs a polynomial of degree >= 1");

  const Polynomial q = p.monic();
  std::vector<Complex> z;

  // Exact zero roots are split off first.
  std::size_t zeros = 0;
  while (zeros < q.coeffs().size() - 1 && q.coeffs()[zeros] == 0.0) ++zeros;
  const Polynomial work(std::vector<double>(q.coeffs().begin() + static_cast<std::ptrdiff_t>(zeros), q.coeffs().end()));
  const int n = work.degree();

  if (n == 1) {
    z.emplace_back(-work[0], 0.0);
  } else if (n > 1) {
    double radius = 1.0;
    for (int i = 0; i < n; ++i) radius = std::max(radius, 1.0 + std::abs(work[static_cast<std::size_t>(i)]));
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> jitter(-0.25, 0.25);
    const double tau = 2.0 * std::acos(-1.0);
    const double offset = 0.4;
    z.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const double angle = offset + (tau * (static_cast<double>(j) + jitter(rng))) / static_cast<double>(n);
      z[static_cast<std::size_t>(j)] = std::polar(radius, angle);
    }

    constexpr int kMaxIter = 500;
    constexpr double kStepTol = 1e-12;
    for (int iter = 0; iter < kMaxIter; ++iter) {
      double worst = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) {
        Complex value, deriv;
        detail::horner_with_derivative(work, z[j], value, deriv);
        if (value == Complex{}) continue;
        if (deriv == Complex{}) {
          z[j] += std::polar(1e-8 * std::max(1.0, std::abs(z[j])), 1.0 + static_cast<double>(j));
          worst = 1.0;
          continue;
        }
        const Complex ratio = value / deriv;
        Complex repulsion{};
        for (std::size_t i = 0; i < z.size(); ++i) {
          if (i != j && z[i] != z[j]) repulsion += 1.0 / (z[j] - z[i]);
        }
        const Complex step = ratio / (1.0 - ratio * repulsion);
        z[j] -= step;
        worst = std::max(worst, std::abs(step) / std::max(std::abs(z[j]), std::numeric_limits<double>::min()));
      }
      if (worst < kStepTol) break;
    }
    detail::merge_clusters(work, z);
  }

  z.insert(z.end(), zeros, Complex{});
  detail::symmetrize(z);
  std::sort(z.begin(), z.end(), [](const Complex& a, const Complex& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });

  const double scale = p.max_abs_coeff();
  const int deg = p.degree();
  for (const Complex& r : z) {
    const double residual = std::abs(p(r)) / (1.0 + std::pow(std::abs(r), deg));
    if (!(residual <= 1e-8 * scale)) throw NumericalError("root finding did not converge");
  }
  return RootSet{std::move(z)};
}

/// prod |r| over the root set.
inline double root_product(const RootSet& rs) {
  if (rs.empty()) throw InvalidInput("root product of an empty root set");
  double prod = 1.0;
  for (const Complex& r : rs.roots) prod *= std::abs(r);
  return prod;
}

/// True iff every root has strictly negative real part.
inline bool is_hurwitz(const Polynomial& p) {
  if (p.degree() < 1) return true;
  return find_roots(p).max_real_part() < 0.0;
}

/// Coefficient-wise interval family {p : lower[i] <= p_i <= upper[i]}.
class IntervalPolynomial {
 public:
  IntervalPolynomial(std::vector<double> lower, std::vector<double> upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.empty())
      throw InvalidInput("interval polynomial bounds must be nonempty and of equal length");
    for (std::size_t i = 0; i < lower_.size(); ++i) {
      if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || lower_[i] > upper_[i])
        throw InvalidInput("interval polynomial needs finite bounds with lower <= upper");
    }
  }

  [[nodiscard]] const std::vector<double>& lower() const { return lower_; }
  [[nodiscard]] const std::vector<double>& upper() const { return upper_; }
  [[nodiscard]] int degree() const { return static_cast<int>(lower_.size()) - 1; }

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/**
 * The four Kharitonov vertex polynomials, ascending-order patterns
 *   K1 = (l, l, u, u, l, l, ...)   K2 = (l, u, u, l, l, u, ...)
 *   K3 = (u, l, l, u, u, l, ...)   K4 = (u, u, l, l, u, u, ...)
 * A family whose leading interval is negative is handled by reflecting it
 * to -p, which has the same roots.
 */
inline std::array<Polynomial, 4> kharitonov_polys(const IntervalPolynomial& ip) {
  std::vector<double> lo = ip.lower();
  std::vector<double> hi = ip.upper();
  if (lo.back() <= 0.0 && hi.back() >= 0.0)
    throw DomainError("degenerate interval family: leading interval contains zero");
  if (hi.back() < 0.0) {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      const double l = -hi[i];
      hi[i] = -lo[i];
      lo[i] = l;
    }
  }
  // true selects the upper bound; period-4 patterns starting at the given phase.
  constexpr std::array<std::array<bool, 4>, 4> patterns{{
      {false, false, true, true},
      {false, true, true, false},
      {true, false, false, true},
      {true, true, false, false},
  }};
  std::array<Polynomial, 4> out;
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> c(lo.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = patterns[k][i % 4] ? hi[i] : lo[i];
    out[k] = Polynomial(std::move(c));
  }
  return out;
}

/// Hurwitz stability of every member of the family (Kharitonov's theorem).
inline bool is_robustly_hurwitz(const IntervalPolynomial& ip) {
  for (const Polynomial& k : kharitonov_polys(ip)) {
    if (k.degree() != ip.degree() || !is_hurwitz(k)) return false;
  }
  return true;
}

}  // namespace ctopt
