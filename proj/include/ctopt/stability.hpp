#pragma once

/**
 * @file stability.hpp
 * @brief Frequency-domain certificates for the linearized algorithm dynamics.
 *
 * For one curvature component the dynamics are a feedback loop of
 *
 *   P_T(s) = (h_{k-1} s^{k-1} + ... + h_1 s + 1) / (s^k + gb_{k-1} s^{k-1} + ... + gb_1 s + 1/kappa)
 *
 * with gb_j = g_j + h_j / kappa, closed through the static gain
 * lambda_f - 1/kappa in [0, 1 - 1/kappa]. The closed-loop polynomial
 * den + (lambda_f - 1/kappa) num is exactly char_poly(spec, lambda_f).
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <string_view>
#include <vector>

#include "ctopt/algorithm_spec.hpp"
#include "ctopt/characteristic.hpp"
#include "ctopt/csv.hpp"
#include "ctopt/errors.hpp"
#include "ctopt/polynomial.hpp"

namespace ctopt {

struct TransferFunction {
  Polynomial numerator;
  Polynomial denominator;

  [[nodiscard]] Complex operator()(Complex s) const { return numerator(s) / denominator(s); }

  /// Value on the contour as |s| -> infinity (zero when strictly proper).
  [[nodiscard]] Complex at_infinity() const {
    if (numerator.degree() < denominator.degree()) return 0.0;
    return numerator.leading() / denominator.leading();
  }
};

inline TransferFunction transfer_function(const AlgorithmSpec& spec, double kappa) {
  if (!(kappa >= 1.0)) throw DomainError("kappa must be >= 1");
  const int k = spec.order();
  std::vector<double> num(static_cast<std::size_t>(k), 0.0);
  std::vector<double> den(static_cast<std::size_t>(k + 1), 0.0);
  num[0] = 1.0;
  den[0] = 1.0 / kappa;
  for (int j = 1; j < k; ++j) {
    num[static_cast<std::size_t>(j)] = spec.h(j);
    den[static_cast<std::size_t>(j)] = spec.g(j) + spec.h(j) / kappa;
  }
  den[static_cast<std::size_t>(k)] = 1.0;
  return TransferFunction{Polynomial(std::move(num)), Polynomial(std::move(den))};
}

/**
 * Divide out roots shared by numerator and denominator (matched within
 * 1e-6 relative). Real roots and conjugate pairs are both cancelled.
 */
inline TransferFunction cancel_common_factor(const TransferFunction& tf) {
  if (tf.numerator.degree() < 1 || tf.denominator.degree() < 1) return tf;
  constexpr double kMatchTol = 1e-6;
  const RootSet rn = find_roots(tf.numerator);
  const RootSet rd = find_roots(tf.denominator);
  std::vector<bool> used(rd.size(), false);
  std::vector<Complex> common;
  for (const Complex& r : rn.roots) {
    if (r.imag() < 0.0) continue;
    for (std::size_t j = 0; j < rd.size(); ++j) {
      if (used[j] || rd.roots[j].imag() < 0.0) continue;
      if (std::abs(r - rd.roots[j]) <= kMatchTol * std::max(1.0, std::abs(r))) {
        used[j] = true;
        common.push_back(rd.roots[j]);
        if (rd.roots[j].imag() > 0.0) common.push_back(std::conj(rd.roots[j]));
        break;
      }
    }
  }
  if (common.empty()) return tf;
  const Polynomial factor = Polynomial::from_roots(common);
  return TransferFunction{divmod(tf.numerator, factor).first, divmod(tf.denominator, factor).first};
}

struct NyquistCurve {
  std::vector<double> omegas;
  std::vector<Complex> points;
  double shift = 0.0;
  /// Image of the contour's points at infinity; closes the curve.
  Complex at_infinity{};
};

/// Logarithmic in |omega| on [1e-6, 1e6], mirrored to negative omega, with omega = 0.
inline std::vector<double> default_omega_grid(int per_decade = 4000, double lo_exp = -6.0, double hi_exp = 6.0) {
  const int n = static_cast<int>(std::lround((hi_exp - lo_exp) * per_decade));
  std::vector<double> pos(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) pos[static_cast<std::size_t>(i)] = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / n);
  std::vector<double> out;
  out.reserve(2 * pos.size() + 1);
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) out.push_back(-*it);
  out.push_back(0.0);
  out.insert(out.end(), pos.begin(), pos.end());
  return out;
}

/// The default grid, built once.
inline const std::vector<double>& standard_omega_grid() {
  static const std::vector<double> grid = default_omega_grid();
  return grid;
}

namespace detail {
inline void require_clear_contour(const TransferFunction& tf, double shift) {
  if (tf.denominator.degree() < 1) return;
  for (const Complex& p : find_roots(tf.denominator).roots) {
    if (std::abs(p.real() + shift) <= 1e-9) throw ContourSingularity("contour passes through a pole");
  }
}
}  // namespace detail

/// points[j] = gain * P(-shift + i omega_j).
inline NyquistCurve nyquist_curve(const TransferFunction& tf, double gain, double shift,
                                  const std::vector<double>& omega_grid) {
  detail::require_clear_contour(tf, shift);
  NyquistCurve c;
  c.omegas = omega_grid;
  c.shift = shift;
  c.points.reserve(omega_grid.size());
  for (double w : omega_grid) c.points.push_back(gain * tf(Complex(-shift, w)));
  c.at_infinity = gain * tf.at_infinity();
  return c;
}

namespace detail {

inline constexpr double kCriticalDistance = 1e-9;
inline constexpr double kMaxArgStep = std::numbers::pi / 2.0;

inline double arg_step(Complex from, Complex to, Complex about) {
  return std::arg((to - about) / (from - about));
}

inline void require_distance(Complex p, Complex about) {
  if (std::abs(p - about) < kCriticalDistance) throw MarginalStability("curve passes through the critical point");
}

// Argument increment from omega a to b, bisecting while a single step turns
// by more than a quarter revolution.
inline double refined_increment(const std::function<Complex(double)>& eval, double wa, Complex pa, double wb,
                                Complex pb, Complex about, int depth) {
  const double d = arg_step(pa, pb, about);
  if (std::abs(d) <= kMaxArgStep || depth == 0) return d;
  const double wm = 0.5 * (wa + wb);
  const Complex pm = eval(wm);
  require_distance(pm, about);
  return refined_increment(eval, wa, pa, wm, pm, about, depth - 1) +
         refined_increment(eval, wm, pm, wb, pb, about, depth - 1);
}

inline int winding_from_total(double total) {
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

}  // namespace detail

/**
 * Signed (counter-clockwise) winding number of the closed curve about a
 * point, from accumulated principal-value argument increments. For a
 * stable open loop, -winding is the number of closed-loop roots to the
 * right of the contour.
 */
inline int winding_number(const NyquistCurve& curve, Complex about = -1.0) {
  if (curve.points.empty()) return 0;
  for (const Complex& p : curve.points) detail::require_distance(p, about);
  detail::require_distance(curve.at_infinity, about);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i)
    total += detail::arg_step(curve.points[i], curve.points[i + 1], about);
  total += detail::arg_step(curve.points.back(), curve.at_infinity, about);
  total += detail::arg_step(curve.at_infinity, curve.points.front(), about);
  return detail::winding_from_total(total);
}

/// As above, but evaluating the transfer function directly and refining the grid where the phase moves fast.
inline int winding_number(const TransferFunction& tf, double gain, double shift, Complex about = -1.0,
                          const std::vector<double>& omega_grid = standard_omega_grid()) {
  detail::require_clear_contour(tf, shift);
  const std::function<Complex(double)> eval = [&](double w) { return gain * tf(Complex(-shift, w)); };
  const Complex at_inf = gain * tf.at_infinity();
  detail::require_distance(at_inf, about);
  double total = 0.0;
  double w_prev = omega_grid.front();
  Complex p_prev = eval(w_prev);
  detail::require_distance(p_prev, about);
  const Complex first = p_prev;
  for (std::size_t i = 1; i < omega_grid.size(); ++i) {
    const double w = omega_grid[i];
    const Complex p = eval(w);
    detail::require_distance(p, about);
    total += detail::refined_increment(eval, w_prev, p_prev, w, p, about, 30);
    w_prev = w;
    p_prev = p;
  }
  total += detail::arg_step(p_prev, at_inf, about);
  total += detail::arg_step(at_inf, first, about);
  return detail::winding_from_total(total);
}

/**
 * Closed-loop stability of the component with curvature lambda_f, decided
 * by the (shifted) Nyquist criterion. With shift = rho > 0 a true result
 * certifies that every closed-loop root has real part below -rho.
 *
 * Requires every open-loop pole left of -shift (PreconditionError
 * otherwise) and lambda_f in [1/kappa, 1]. A common numerator/denominator
 * factor is cancelled first; its roots are open-loop poles and so already
 * satisfy the requirement.
 */
inline bool nyquist_stable(const AlgorithmSpec& spec, double kappa, double lambda_f, double shift = 0.0,
                           const std::vector<double>& omega_grid = standard_omega_grid()) {
  if (!(kappa >= 1.0)) throw DomainError("kappa must be >= 1");
  if (!(lambda_f <= 1.0 && lambda_f >= 1.0 / kappa - 1e-15)) throw DomainError("lambda_f must lie in [1/kappa, 1]");
  if (!(shift >= 0.0)) throw DomainError("shift must be nonnegative");
  const TransferFunction tf = transfer_function(spec, kappa);
  if (find_roots(tf.denominator).max_real_part() >= -shift)
    throw PreconditionError("open loop is not stable with respect to the shifted contour");
  const double gain = std::max(0.0, lambda_f - 1.0 / kappa);
  const TransferFunction reduced = cancel_common_factor(tf);
  return winding_number(reduced, gain, shift, Complex(-1.0), omega_grid) == 0;
}

enum class CircleCase { above, equal, below };

inline std::string_view to_string(CircleCase c) {
  switch (c) {
    case CircleCase::above: return "above";
    case CircleCase::equal: return "equal";
    case CircleCase::below: return "below";
  }
  return "unknown";
}

struct CircleReport {
  bool ok = false;
  CircleCase which = CircleCase::above;
  /// Smallest slack of the graphical condition over all checked points.
  double slack = 0.0;
  /// Passed, but within ten times the strictness margin.
  bool near_margin = false;
  /// The analytic first-order circle geometry was also checked.
  bool analytic = false;
  /// Disk D on the real line between these two points.
  double disk_left = 0.0;
  double disk_right = 0.0;
};

inline constexpr double kStrictMargin = 1e-9;

/**
 * Graphical circle criterion for the loop P_T with the nonlinearity
 * grad f(x) - x / kappa in the sector [alpha_s - 1/kappa, 1 - 1/kappa].
 * D is the disk on the real-axis segment between -1/(alpha_s - 1/kappa)
 * and -1/(1 - 1/kappa):
 *   alpha_s > 1/kappa: the graph of P_T(i omega) stays out of D (and does not encircle it);
 *   alpha_s = 1/kappa: the graph stays strictly right of Re = -1/(1 - 1/kappa);
 *   alpha_s < 1/kappa: the graph lies in the interior of D.
 */
inline CircleReport circle_criterion(const AlgorithmSpec& spec, double kappa, double alpha_s,
                                     const std::vector<double>& omega_grid = standard_omega_grid()) {
  if (!(kappa > 1.0)) throw DomainError("circle criterion needs kappa > 1");
  if (!(alpha_s > 0.0 && alpha_s <= 1.0)) throw DomainError("alpha_s must lie in (0, 1]");

  const TransferFunction tf = cancel_common_factor(transfer_function(spec, kappa));
  detail::require_clear_contour(tf, 0.0);
  const double inv_kappa = 1.0 / kappa;
  const double right = -1.0 / (1.0 - inv_kappa);

  CircleReport rep;
  if (std::abs(alpha_s - inv_kappa) <= 1e-12) {
    rep.which = CircleCase::equal;
  } else {
    rep.which = alpha_s > inv_kappa ? CircleCase::above : CircleCase::below;
  }
  const double left = rep.which == CircleCase::equal ? -std::numeric_limits<double>::infinity()
                                                     : -1.0 / (alpha_s - inv_kappa);
  rep.disk_left = std::min(left, right);
  rep.disk_right = std::max(left, right);
  const double centre = 0.5 * (rep.disk_left + rep.disk_right);
  const double radius = 0.5 * (rep.disk_right - rep.disk_left);

  auto slack_of = [&](Complex p) {
    switch (rep.which) {
      case CircleCase::above: return std::abs(p - centre) - radius;
      case CircleCase::equal: return p.real() - right;
      case CircleCase::below: return radius - std::abs(p - centre);
    }
    return 0.0;
  };

  double slack = slack_of(tf.at_infinity());
  for (double w : omega_grid) slack = std::min(slack, slack_of(tf(Complex(0.0, w))));

  // b / (s + a) maps the imaginary axis onto the circle with diameter [0, b/a].
  if (tf.numerator.degree() == 0 && tf.denominator.degree() == 1 && tf.denominator[0] / tf.denominator[1] > 0.0) {
    rep.analytic = true;
    const double b = tf.numerator[0] / tf.denominator[1];
    const double a = tf.denominator[0] / tf.denominator[1];
    const double pc = 0.5 * b / a;
    const double pr = std::abs(pc);
    double geometric = 0.0;
    switch (rep.which) {
      case CircleCase::above: geometric = std::abs(pc - centre) - pr - radius; break;
      case CircleCase::equal: geometric = (pc - pr) - right; break;
      case CircleCase::below: geometric = radius - (std::abs(pc - centre) + pr); break;
    }
    slack = std::min(slack, geometric);
  }

  rep.slack = slack;
  rep.ok = slack > kStrictMargin;
  if (rep.ok && rep.which == CircleCase::above) {
    // Staying outside D is not enough if the closed curve surrounds it.
    rep.ok = winding_number(tf, 1.0, 0.0, Complex(centre), omega_grid) == 0;
  }
  rep.near_margin = rep.ok && slack < 10.0 * kStrictMargin;
  return rep;
}

/// Largest root magnitude of char_poly over the lambda grid.
inline double max_root_magnitude(const AlgorithmSpec& spec, double kappa, int grid_size = kDefaultLambdaGrid) {
  double m = 0.0;
  for (double lf : lambda_grid(kappa, grid_size)) m = std::max(m, find_roots(char_poly(spec, lf)).max_abs());
  return m;
}

/// CSV with columns omega, re, im.
inline void write_curve_csv(std::ostream& os, const NyquistCurve& curve) {
  os << "omega,re,im\n";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    os << format_double(curve.omegas[i]) << ',' << format_double(curve.points[i].real()) << ','
       << format_double(curve.points[i].imag()) << '\n';
  }
}

}  // namespace ctopt
