#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qillum/model.hpp"
#include "qillum/photonstats.hpp"

namespace qillum {

/// Per-parameter-set constants of the signal detection channel.
///   z     = 1 + eta n_B   (no-click normalizer)
///   gamma = eta kappa / z (coherent exponent rate)
///   x     = 1 - gamma     (per-photon no-click attenuation factor)
struct ChannelConstants {
  double z;
  double log_z;
  double gamma;
  double x;

  static ChannelConstants make(double eta, double kappa, double n_bar_B) {
    ChannelConstants c;
    c.z = 1.0 + eta * n_bar_B;
    c.log_z = std::log1p(eta * n_bar_B);
    c.gamma = eta * kappa / c.z;
    c.x = 1.0 - c.gamma;
    return c;
  }
  static ChannelConstants from(const SystemParams& p) {
    return make(p.eta, p.kappa, p.n_bar_B);
  }
};

/// P(no click | object absent) = 1 / (1 + eta n_B).
inline double p_noclick_background(double eta, double n_bar_B) {
  return 1.0 / (1.0 + eta * n_bar_B);
}

/// P(no click | object present, coherent pulse of mean photon number
/// lambda) = exp(-eta kappa lambda / (1 + eta n_B)) / (1 + eta n_B).
inline double p_noclick_object_coherent(double eta, double kappa,
                                        double n_bar_B, double lambda) {
  if (!(lambda >= 0.0))
    throw std::invalid_argument("p_noclick_object_coherent: lambda < 0");
  const ChannelConstants c = ChannelConstants::make(eta, kappa, n_bar_B);
  return std::exp(-c.gamma * lambda) / c.z;
}

/// P(no click | object present, n-photon Fock pulse) = x^n / z.
/// Poisson-mixing this over n at mean lambda reproduces the coherent
/// no-click probability exactly.
inline double p_noclick_object_fock(double eta, double kappa, double n_bar_B,
                                    int n) {
  if (n < 0) throw std::invalid_argument("p_noclick_object_fock: n < 0");
  const ChannelConstants c = ChannelConstants::make(eta, kappa, n_bar_B);
  return std::pow(c.x, n) / c.z;
}

/// Effective background mean with detector dark counts folded in:
/// n_B = n'_B + P_D / (eta (1 - P_D)).
inline double effective_background(double stray_background, double dark_prob,
                                   double eta) {
  if (!(dark_prob >= 0.0 && dark_prob < 1.0))
    throw std::invalid_argument("dark_prob out of range [0,1): got " +
                                std::to_string(dark_prob));
  if (!(stray_background >= 0.0))
    throw std::invalid_argument("stray background < 0");
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("eta out of range (0,1]");
  return stray_background + dark_prob / (eta * (1.0 - dark_prob));
}

/// Conditional signal no-click probability for the TMSV protocol, plus
/// log-space values assembled without an exp/log round trip so that the
/// click likelihood keeps full accuracy when eta*kappa/z ~ 1e-8.
struct TmsvConditional {
  double noclick;
  double log_noclick;
  double log_click;
};

namespace detail {

inline TmsvConditional tmsv_conditional(double eta, double kappa, double n_bar,
                                        double n_bar_B, int detectors,
                                        int click_count) {
  const ChannelConstants c = ChannelConstants::make(eta, kappa, n_bar_B);
  const PatternExpansion ex{click_count, detectors, eta};
  std::vector<double> den_terms(click_count + 1), gap_terms(click_count + 1);
  for (int t = 0; t <= click_count; ++t) {
    const double a = ex.attenuation(t);
    const double den_t = thermal_geometric_sum(n_bar, a);
    const double num_t = thermal_geometric_sum(n_bar, c.x * a);
    den_terms[t] = ex.coeff(t) * den_t;
    // den_t - num_t in analytically cancelled form, proportional to gamma
    gap_terms[t] = ex.coeff(t) * n_bar * a * c.gamma * den_t * num_t;
  }
  const double den = signed_sum(den_terms);
  if (!(den > 1e-300))
    throw std::domain_error("tmsv conditional: degenerate pattern probability");
  const double gap = signed_sum(gap_terms);  // den - num >= 0

  TmsvConditional out;
  const double log_ratio = std::log1p(-gap / den);  // log(num/den) <= 0
  out.log_noclick = log_ratio - c.log_z;
  out.noclick = std::exp(out.log_noclick);
  out.log_click = std::log(-std::expm1(out.log_noclick));
  return out;
}

}  // namespace detail

/// Signal-detector no-click probability conditioned on the idler click
/// pattern and the hypothesis. Under "absent" the idler tells us nothing
/// about the background-only signal mode, so the pattern drops out.
inline double tmsv_signal_noclick(const SystemParams& params, int detectors,
                                  ClickPattern pattern, Hypothesis hyp) {
  if (pattern.detectors != detectors)
    throw std::invalid_argument("pattern/detector count mismatch");
  if (hyp == Hypothesis::absent)
    return p_noclick_background(params.eta, params.n_bar_B);
  return detail::tmsv_conditional(params.eta, params.kappa, params.n_bar,
                                  params.n_bar_B, detectors,
                                  pattern.click_count())
      .noclick;
}

// ---------------------------------------------------------------------
// Appendix-A oracle: direct 2-D quadrature of the complex-beta integral
// over the thermal P-function, before any analytic collapse. Test-side
// cross-check for p_noclick_object_coherent; not used on the hot path.
// ---------------------------------------------------------------------

namespace detail {

struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // for weight function exp(-t^2)
};

/// Nodes via Newton iteration on orthonormal Hermite polynomials,
/// weights as Christoffel numbers 1 / sum_k p_k(x)^2.
inline GaussHermiteRule gauss_hermite(int order) {
  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  const int half = (order + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    // standard initial guesses, largest root first
    if (i == 0)
      z = std::sqrt(2.0 * order + 1.0) -
          1.85575 * std::pow(2.0 * order + 1.0, -1.0 / 6.0);
    else if (i == 1)
      z -= 1.14 * std::pow(order, 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * rule.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * rule.nodes[1];
    else
      z = 2.0 * z - rule.nodes[i - 2];

    double p_prev = 0.0, p_cur = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      p_cur = pim4;
      p_prev = 0.0;
      for (int j = 0; j < order; ++j) {
        const double p_next = z * std::sqrt(2.0 / (j + 1.0)) * p_cur -
                              std::sqrt(double(j) / (j + 1.0)) * p_prev;
        p_prev = p_cur;
        p_cur = p_next;
      }
      const double deriv = std::sqrt(2.0 * order) * p_prev;
      const double step = p_cur / deriv;
      z -= step;
      if (std::fabs(step) <= 1e-15 * (1.0 + std::fabs(z))) break;
    }
    // Christoffel weight: w = 1 / sum_{k<order} p_k(z)^2
    double s = 0.0, pk = pim4, pkm = 0.0;
    for (int j = 0; j < order; ++j) {
      s += pk * pk;
      const double p_next = z * std::sqrt(2.0 / (j + 1.0)) * pk -
                            std::sqrt(double(j) / (j + 1.0)) * pkm;
      pkm = pk;
      pk = p_next;
    }
    rule.nodes[i] = z;
    rule.weights[i] = 1.0 / s;
    rule.nodes[order - 1 - i] = -z;
    rule.weights[order - 1 - i] = rule.weights[i];
  }
  return rule;
}

}  // namespace detail

/// Appendix-A detection-probability oracle: evaluates
///   P(0|O,lambda) = Int d^2 beta  e^{-|beta|^2/m} / (pi m)
///                   * exp(-eta |i sqrt(k) alpha + sqrt(1-k) beta|^2)
/// with m = n_B/(1-kappa), by tensor Gauss-Hermite quadrature refined
/// until two successive orders agree to 1e-10.
inline double noclick_oracle_appendix_a(double eta, double kappa,
                                        double n_bar_B, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda < 0");
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw std::invalid_argument("kappa out of range [0,1)");
  if (n_bar_B == 0.0)  // P-function weight degenerates to a point mass
    return std::exp(-eta * kappa * lambda);

  const double m_bar = n_bar_B / (1.0 - kappa);
  const double alpha = std::sqrt(lambda);
  const double scale = std::sqrt(m_bar);  // beta = scale * (t_x + i t_y)

  const auto integrand = [&](double bx, double by) {
    const double det_sq = (1.0 - kappa) * bx * bx +
                          (std::sqrt(kappa) * alpha +
                           std::sqrt(1.0 - kappa) * by) *
                              (std::sqrt(kappa) * alpha +
                               std::sqrt(1.0 - kappa) * by);
    return std::exp(-eta * det_sq);
  };

  double previous = 0.0;
  bool have_previous = false;
  for (int order : {24, 32, 48, 64, 96, 128, 192}) {
    const detail::GaussHermiteRule rule = detail::gauss_hermite(order);
    double total = 0.0;
    for (int ix = 0; ix < order; ++ix) {
      double row = 0.0;
      for (int iy = 0; iy < order; ++iy)
        row += rule.weights[iy] *
               integrand(scale * rule.nodes[ix], scale * rule.nodes[iy]);
      total += rule.weights[ix] * row;
    }
    total /= M_PI;  // Gaussian weights already absorb e^{-|beta|^2/m}/m
    if (have_previous && std::fabs(total - previous) <= 1e-10)
      return total;
    previous = total;
    have_previous = true;
  }
  throw std::runtime_error("appendix-A quadrature did not converge");
}

}  // namespace qillum
