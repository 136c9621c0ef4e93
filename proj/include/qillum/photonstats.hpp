#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qillum/model.hpp"
#include "qillum/rng.hpp"

namespace qillum {

/// Truncated photon-number distribution. probs[n] holds p(n) for
/// n = 0..cutoff; tail_mass bounds the omitted probability beyond the
/// cutoff (kept at or below the tolerance the builder was given).
struct PhotonDistribution {
  std::vector<double> probs;
  double tail_mass = 0.0;

  double sum() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }
  double mean() const {
    double m = 0.0;
    for (std::size_t n = 1; n < probs.size(); ++n) m += double(n) * probs[n];
    return m;
  }
  /// <n(n-1)>
  double second_factorial_moment() const {
    double m = 0.0;
    for (std::size_t n = 2; n < probs.size(); ++n)
      m += double(n) * double(n - 1) * probs[n];
    return m;
  }
};

/// Outcome of the N-detector idler bank: which detectors fired.
struct ClickPattern {
  std::uint32_t fired = 0;  // bitmask over detector indices
  int detectors = 1;

  int click_count() const { return std::popcount(fired); }

  static ClickPattern none(int detectors) { return make(0, detectors); }
  static ClickPattern make(std::uint32_t mask, int detectors) {
    if (detectors < 1 || detectors > kMaxIdlerDetectors)
      throw std::invalid_argument("detectors out of range [1," +
                                  std::to_string(kMaxIdlerDetectors) + "]");
    if (detectors < 32 && (mask >> detectors) != 0)
      throw std::invalid_argument("click pattern has indices >= N");
    return {mask, detectors};
  }
};

/// Thermal pmf p(n) = m^n / (1+m)^{n+1}; cutoff chosen so the exact
/// geometric tail (m/(1+m))^{cutoff+1} is at most tail_tol.
inline PhotonDistribution thermal_pmf(double m_bar, double tail_tol = 1e-12) {
  if (!(m_bar >= 0.0)) throw std::invalid_argument("thermal_pmf: m_bar < 0");
  if (m_bar == 0.0) return {{1.0}, 0.0};
  const double ratio = m_bar / (1.0 + m_bar);
  PhotonDistribution d;
  double p = 1.0 / (1.0 + m_bar);
  double tail = ratio;  // mass beyond n after pushing p(n): ratio^{n+1}
  d.probs.push_back(p);
  while (tail > tail_tol) {
    p *= ratio;
    tail *= ratio;
    d.probs.push_back(p);
  }
  d.tail_mass = std::max(0.0, 1.0 - d.sum());
  return d;
}

/// Poisson pmf with a certified geometric-domination tail bound: beyond
/// cutoff c >= lambda, successive terms shrink by at least
/// lambda/(c+2), so the remainder is below p(c+1)/(1 - lambda/(c+2)).
inline PhotonDistribution poisson_pmf(double lambda, double tail_tol = 1e-12) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("poisson_pmf: lambda < 0");
  if (lambda == 0.0) return {{1.0}, 0.0};
  PhotonDistribution d;
  double term = std::exp(-lambda);
  if (term == 0.0) {
    // extremely large lambda: build in log space around the mode
    throw std::invalid_argument("poisson_pmf: lambda too large for direct"
                                " evaluation: " + std::to_string(lambda));
  }
  d.probs.push_back(term);
  for (std::size_t n = 1;; ++n) {
    term *= lambda / double(n);
    d.probs.push_back(term);
    if (double(n) >= lambda) {
      const double q = lambda / double(n + 2);
      const double bound = term * q / (1.0 - q);
      if (bound <= tail_tol) break;
    }
    if (n > 400000) throw std::runtime_error("poisson_pmf: cutoff runaway");
  }
  d.tail_mass = std::max(0.0, 1.0 - d.sum());
  return d;
}

/// Closed-form sum over a thermal pmf: sum_n p(n) y^n = 1/(1 + m(1-y)).
inline double thermal_geometric_sum(double m_bar, double y) {
  if (!(m_bar >= 0.0) || !(y >= 0.0 && y <= 1.0))
    throw std::invalid_argument("thermal_geometric_sum: bad arguments");
  return 1.0 / (1.0 + m_bar * (1.0 - y));
}

/// Draw the mean photon number of one mimic pulse: exponential with mean
/// n_bar. The optical phase is never sampled; it does not enter any
/// conditional detection probability.
inline double sample_mimic_intensity(double n_bar, RandomStream& stream) {
  if (!(n_bar > 0.0))
    throw std::invalid_argument("sample_mimic_intensity: n_bar <= 0");
  return stream.next_exponential(n_bar);
}

/// Probability that a specified set of j of the N idler detectors all
/// stay silent given exactly n idler photons behind the balanced
/// splitter: (1 - eta j / N)^n.
inline double idler_silent_prob(int silent, int detectors, double eta,
                                int photons) {
  if (silent < 0 || silent > detectors)
    throw std::invalid_argument("idler_silent_prob: need 0 <= j <= N");
  if (photons < 0) throw std::invalid_argument("idler_silent_prob: n < 0");
  if (silent == 0) return 1.0;
  const double base = 1.0 - eta * double(silent) / double(detectors);
  return std::pow(base, photons);
}

namespace detail {

inline double binomial_coeff(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c *= double(n - k + i) / double(i);
  return c;
}

// Signed inclusion-exclusion sum evaluated in descending-magnitude order
// with Neumaier compensation.
inline double signed_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end(),
            [](double a, double b) { return std::fabs(a) > std::fabs(b); });
  double s = 0.0, comp = 0.0;
  for (double t : terms) {
    const double u = s + t;
    if (std::fabs(s) >= std::fabs(t))
      comp += (s - u) + t;
    else
      comp += (t - u) + s;
    s = u;
  }
  return s + comp;
}

// Exact-pattern probability for k clicks out of N given n idler photons,
// as inclusion-exclusion coefficients over idler_silent_prob factors:
// P(pattern | n) = sum_t (-1)^t C(k,t) (1 - eta (N-k+t)/N)^n.
// attenuation(t) below returns that base, shared by several routines.
struct PatternExpansion {
  int clicks;
  int detectors;
  double eta;
  double coeff(int t) const {
    return ((t % 2) ? -1.0 : 1.0) * binomial_coeff(clicks, t);
  }
  double attenuation(int t) const {
    return 1.0 - eta * double(detectors - clicks + t) / double(detectors);
  }
};

}  // namespace detail

/// Marginal probability of an exact idler click pattern under the
/// thermal idler state (mean n_bar). Depends on the pattern only through
/// its click count; evaluated as a signed sum of closed-form geometric
/// sums, largest magnitude first.
inline double idler_pattern_marginal(double n_bar, double eta, int detectors,
                                     ClickPattern pattern) {
  if (pattern.detectors != detectors)
    throw std::invalid_argument("pattern/detector count mismatch");
  const detail::PatternExpansion ex{pattern.click_count(), detectors, eta};
  std::vector<double> terms;
  terms.reserve(ex.clicks + 1);
  for (int t = 0; t <= ex.clicks; ++t)
    terms.push_back(ex.coeff(t) *
                    thermal_geometric_sum(n_bar, ex.attenuation(t)));
  return detail::signed_sum(terms);
}

/// Click-count pmf over the idler bank: entry k is the probability that
/// exactly k of the N detectors fire (any identity).
inline std::vector<double> idler_click_count_pmf(double n_bar, double eta,
                                                 int detectors) {
  std::vector<double> pmf(detectors + 1);
  for (int k = 0; k <= detectors; ++k) {
    const auto pat = ClickPattern::make((k ? (1u << k) - 1u : 0u), detectors);
    pmf[k] = detail::binomial_coeff(detectors, k) *
             idler_pattern_marginal(n_bar, eta, detectors, pat);
  }
  return pmf;
}

/// Signal-mode photon distribution conditioned on an idler click
/// pattern: p(n | pattern) ~ thermal(n_bar)[n] * P(pattern | n).
inline PhotonDistribution conditional_signal_pmf(double n_bar, double eta,
                                                 int detectors,
                                                 ClickPattern pattern,
                                                 double tail_tol = 1e-12) {
  const double marginal =
      idler_pattern_marginal(n_bar, eta, detectors, pattern);
  if (!(marginal > 1e-300))
    throw std::domain_error("conditional_signal_pmf: degenerate pattern"
                            " probability " + std::to_string(marginal));
  const detail::PatternExpansion ex{pattern.click_count(), detectors, eta};
  const double ratio = n_bar / (1.0 + n_bar);

  PhotonDistribution d;
  std::vector<double> apow(ex.clicks + 1, 1.0);
  double thermal = 1.0 / (1.0 + n_bar);
  double thermal_tail = ratio;  // mass of thermal beyond current n
  for (std::size_t n = 0;; ++n) {
    std::vector<double> terms(ex.clicks + 1);
    for (int t = 0; t <= ex.clicks; ++t) terms[t] = ex.coeff(t) * apow[t];
    const double cond = detail::signed_sum(terms);  // P(pattern | n)
    d.probs.push_back(thermal * std::max(cond, 0.0) / marginal);
    // conditional tail <= thermal tail / marginal since P(pattern|n) <= 1
    if (thermal_tail <= tail_tol * marginal) break;
    for (int t = 0; t <= ex.clicks; ++t) apow[t] *= ex.attenuation(t);
    thermal *= ratio;
    thermal_tail *= ratio;
    if (n > 2000000) throw std::runtime_error("conditional pmf runaway");
  }
  d.tail_mass = std::max(0.0, 1.0 - d.sum());
  return d;
}

/// Zero-delay second-order coherence g2(0) = <n(n-1)> / <n>^2.
inline double g2_zero(const PhotonDistribution& dist) {
  const double mean = dist.mean();
  if (!(mean > 0.0))
    throw std::domain_error("g2_zero: distribution mean must be positive");
  return dist.second_factorial_moment() / (mean * mean);
}

}  // namespace qillum
