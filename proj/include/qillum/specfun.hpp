#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "qillum/quadrature.hpp"

namespace qillum {

inline constexpr double kEulerGamma = 0.5772156649015328606;

/// Digamma function for x > 0: recurrence up-shift into the asymptotic
/// region, then the standard Bernoulli-number expansion.
inline double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma requires x > 0");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi(x) ~ ln x - 1/(2x) - sum B_2n / (2n x^{2n})
  const double series =
      inv2 * (1.0 / 12 +
              inv2 * (-1.0 / 120 +
                      inv2 * (1.0 / 252 +
                              inv2 * (-1.0 / 240 +
                                      inv2 * (1.0 / 132 +
                                              inv2 * (-691.0 / 32760 +
                                                      inv2 * (1.0 / 12)))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

/// Harmonic function H(x) = Euler's constant + psi(x + 1), x > 0.
inline double harmonic_real(double x) {
  if (!(x > 0.0)) throw std::domain_error("harmonic_real requires x > 0");
  return kEulerGamma + digamma(x + 1.0);
}

namespace detail {
// x^{-k} - (x+1/2)^{-k} without subtractive cancellation.
inline double half_shift_power_diff(double x, int k) {
  const double t = k * std::log1p(0.5 / x);
  return std::pow(x, -k) * (-std::expm1(-t));
}
}  // namespace detail

/// psi(w + 1/2) - psi(w) for w > 0, computed as a difference from the
/// start so the result keeps full relative accuracy even when w is so
/// large that the two digamma values agree to 10+ digits. Uses the exact
/// series sum_j (1/2)/((w+j)(w+j+1/2)) with an Euler–Maclaurin closure.
inline double psi_half_diff(double w) {
  if (!(w > 0.0)) throw std::domain_error("psi_half_diff requires w > 0");
  double head = 0.0;
  double wj = w;
  int shifts = 0;
  while (wj < 128.0) {
    ++shifts;
    wj += 1.0;
  }
  for (int j = shifts - 1; j >= 0; --j) {  // ascending magnitude
    const double y = w + j;
    head += 0.5 / (y * (y + 0.5));
  }
  const double W = wj;
  const double g = 0.5 / (W * (W + 0.5));
  const double d2 = detail::half_shift_power_diff(W, 2);
  const double d4 = detail::half_shift_power_diff(W, 4);
  const double d6 = detail::half_shift_power_diff(W, 6);
  const double tail =
      std::log1p(0.5 / W) + 0.5 * g + d2 / 12.0 - d4 / 120.0 + d6 / 252.0;
  return head + tail;
}

namespace detail {

// phi_j(b, A) = Integral_0^1 t^{b-1} (1-t)^j / (1 - A t) dt, j in {0,1,2}.
// Equals sum_k A^k j! / [(b+k)(b+k+1)...(b+k+j)]; every term is positive.
inline double phi_weighted_series(double b, int j, double a_arg) {
  double sum = 0.0;
  double apow = 1.0;
  const double jfact = (j == 2) ? 2.0 : 1.0;
  for (long k = 0; k < 100000000L; ++k) {
    double denom = b + k;
    for (int i = 1; i <= j; ++i) denom *= (b + k + i);
    const double term = apow * jfact / denom;
    sum += term;
    if (term < sum * 1e-17 || term == 0.0) return sum;
    apow *= a_arg;
  }
  throw std::runtime_error("phi_weighted series did not converge");
}

// Quadrature route for A near 1, split at t = 1/2 into two integrals
// whose substitutions leave smooth, positive, layer-free integrands:
//   t in (0, 1/2]: v = -ln t, integrand e^{-b v} (1-e^{-v})^j/(1-A e^{-v}),
//     denominator bounded below by 1 - A/2 >= 1/2;
//   t in [1/2, 1): delta = ln((1-A+A(1-t))/(1-A)), which spreads the
//     (1-A)-wide endpoint layer over an O(|ln(1-A)|) range.
inline double phi_weighted_quad(double b, int j, double a_arg) {
  

  const auto left_f = [=](double v) {
    const double t = std::exp(-v);
    double num = 1.0;
    const double em = -std::expm1(-v);  // 1 - t
    for (int i = 0; i < j; ++i) num *= em;
    return std::exp(-b * v) * num / (1.0 - a_arg * t);
  };
  const double v_hi = std::log(2.0) + 50.0 / b;
  const QuadResult left =
      integrate_gk(left_f, std::log(2.0), v_hi, 1e-280, 3e-13, 20000);

  // w = 1 - t in [0, 1/2]; delta = ln(((1-A) + A w)/(1-A)). The factor
  // t^{b-1} is assembled from log1p of exactly-representable small
  // quantities: with b ~ 1e9 any absolute rounding in log t would be
  // amplified catastrophically.
  const double one_minus_a = 1.0 - a_arg;
  const double len = std::log1p(0.5 * a_arg / one_minus_a);
  const auto right_f = [=](double delta) {
    const double q = one_minus_a * std::exp(delta);  // 1 - A t
    const double log_t = std::log1p(-q) - std::log1p(-one_minus_a);
    const double w = one_minus_a * std::expm1(delta) / a_arg;  // 1 - t
    double num = 1.0;
    for (int i = 0; i < j; ++i) num *= w;
    return std::exp((b - 1.0) * log_t) * num;
  };
  // For large b the integrand is a spike of width ~ 1/(b (1-A)) at
  // delta = 0, far narrower than the full range; walk dyadic panels from
  // the decay scale outward so no panel can miss it entirely.
  const double decay = 1.0 / (std::max(b - 1.0, 1.0) * one_minus_a);
  double right_val = 0.0;
  bool right_ok = true;
  double lo = 0.0, width = std::min(len, 0.5 * decay);
  while (lo < len) {
    const double hi = std::min(len, lo + width);
    const QuadResult piece =
        integrate_gk(right_f, lo, hi, 1e-280, 3e-13, 20000);
    right_val += piece.value;
    right_ok = right_ok && piece.converged;
    lo = hi;
    width *= 2.0;
  }

  if (!left.converged || !right_ok)
    throw std::runtime_error("phi_weighted quadrature did not converge (b=" +
                             std::to_string(b) + ", A=" + std::to_string(a_arg) +
                             ")");
  return left.value + right_val / a_arg;
}

inline double phi_weighted(double b, int j, double a_arg) {
  if (!(b > 0.0)) throw std::domain_error("phi_weighted requires b > 0");
  if (!(a_arg >= 0.0 && a_arg < 1.0))
    throw std::domain_error("phi_weighted requires 0 <= A < 1");
  if (a_arg < 0.5) return phi_weighted_series(b, j, a_arg);
  // ~ -ln(eps)/(1-A) series terms; switch to quadrature once that is slower.
  const double est_terms = 41.0 / -std::log(a_arg);
  if (est_terms <= 20000.0) return phi_weighted_series(b, j, a_arg);
  return phi_weighted_quad(b, j, a_arg);
}

}  // namespace detail

/// Gauss hypergeometric function 2F1(1, b; b+1; A) for b > 0 and
/// 0 <= A < 1. Power series away from A = 1; integral-representation
/// quadrature in the slowly-converging region near A = 1.
inline double hyp2f1_1bA(double b, double a_arg) {
  if (!(b > 0.0)) throw std::domain_error("hyp2f1_1bA requires b > 0");
  if (!(a_arg >= 0.0 && a_arg < 1.0))
    throw std::domain_error("hyp2f1_1bA requires 0 <= A < 1");
  return b * detail::phi_weighted(b, 0, a_arg);
}

}  // namespace qillum
