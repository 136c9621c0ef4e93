#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qillum/detection.hpp"
#include "qillum/model.hpp"
#include "qillum/photonstats.hpp"
#include "qillum/quadrature.hpp"
#include "qillum/specfun.hpp"

namespace qillum {

/// Constants of the single-shot comparison theory:
///   A = 1/(1+2 eta n_B), beta = (1+eta n_B)/(eta kappa n_bar),
///   C = (1+eta n_B)/(1+2 eta n_B).
struct ComparisonConstants {
  double a;
  double beta;
  double c;

  static ComparisonConstants from(const SystemParams& p) {
    if (!(p.kappa > 0.0))
      throw std::invalid_argument("kappa must be positive for the analytic"
                                  " comparison (beta would diverge)");
    const double z = 1.0 + p.eta * p.n_bar_B;
    return {1.0 / (2.0 * z - 1.0), z / (p.eta * p.kappa * p.n_bar),
            z / (2.0 * z - 1.0)};
  }
};

/// Single-shot average posterior for the random-coherent (mimic)
/// protocol, object present, equal priors:
///
///   P_rc = (1/(2 eta kappa n)) [H((1+beta)/2) - H(beta/2)]
///        + beta C [ F(beta)/beta - 2 F(beta+1)/((beta+1) z)
///                 + F(beta+2)/((beta+2) z^2) ],   F(b) = 2F1(1,b;b+1;A).
///
/// The harmonic difference goes through psi_half_diff and the
/// hypergeometric combination through an algebraically equivalent
/// positive-term split, so the value stays accurate when the three
/// 2F1 terms would cancel (small n_B) or beta ~ 1e9 (kappa ~ 1e-7).
inline double p_rc_average(const SystemParams& params) {
  validate_params(params);
  const ComparisonConstants k = ComparisonConstants::from(params);
  const double z = 1.0 + params.eta * params.n_bar_B;
  const double zm1 = params.eta * params.n_bar_B;

  const double i0 = (k.beta / (2.0 * z)) * psi_half_diff((k.beta + 2.0) / 2.0);
  // (1 - t/z)^2 = (1-t)^2 + 2 (1-t) t (z-1)/z + t^2 (z-1)^2/z^2
  const double i1 =
      k.beta * k.a * z *
      (detail::phi_weighted(k.beta, 2, k.a) +
       (2.0 * zm1 / z) * detail::phi_weighted(k.beta + 1.0, 1, k.a) +
       (zm1 * zm1 / (z * z)) * detail::phi_weighted(k.beta + 2.0, 0, k.a));
  return i0 + i1;
}

/// Independent route to the same quantity: adaptive quadrature of the
/// no-detection and detection integrals in their lambda forms.
inline double rc_quadrature_oracle(const SystemParams& params) {
  validate_params(params);
  if (!(params.kappa > 0.0))
    throw std::invalid_argument("kappa must be positive");
  const ChannelConstants cc = ChannelConstants::from(params);
  const double nbar = params.n_bar;
  const double lmax = 45.0 * nbar;

  const auto f0 = [&](double lam) {
    const double t = std::exp(-cc.gamma * lam);
    return std::exp(-lam / nbar) / (nbar * cc.z) * t * t / (t + 1.0);
  };
  const auto f1 = [&](double lam) {
    const double a = -std::expm1(-(cc.gamma * lam + cc.log_z));
    const double b = -std::expm1(-cc.log_z);
    return std::exp(-lam / nbar) / nbar * a * a / (a + b);
  };
  const QuadResult r0 = integrate_gk(f0, 0.0, lmax, 1e-13, 1e-12, 20000);
  const QuadResult r1 = integrate_gk(f1, 0.0, lmax, 1e-13, 1e-12, 20000);
  if (!r0.converged || !r1.converged)
    throw std::runtime_error("rc_quadrature_oracle did not converge");
  return r0.value + r1.value;
}

/// Single-shot average posterior for the direct-measurement protocol
/// with one idler detector, object present, equal priors (Eq. form:
/// sum over idler/signal outcomes of p(i) P(s|i,O)^2 / (P(s|i,O)+P(s|i,absent))).
inline double p_dm_average(const SystemParams& params) {
  validate_params(params);
  const double p_idler_silent = 1.0 / (1.0 + params.eta * params.n_bar);
  const double p_bg = p_noclick_background(params.eta, params.n_bar_B);

  double total = 0.0;
  for (int i = 0; i <= 1; ++i) {
    const double pi = (i == 0) ? p_idler_silent : 1.0 - p_idler_silent;
    const double noclick =
        detail::tmsv_conditional(params.eta, params.kappa, params.n_bar,
                                 params.n_bar_B, 1, i)
            .noclick;
    for (int s = 0; s <= 1; ++s) {
      const double p_present = (s == 0) ? noclick : 1.0 - noclick;
      const double p_absent = (s == 0) ? p_bg : 1.0 - p_bg;
      total += pi * p_present * p_present / (p_present + p_absent);
    }
  }
  return total;
}

struct CrossoverResult {
  double n_bar_min = 0.0;
  bool multiple_crossings = false;
};

/// Smallest n_bar in [lo, hi] where the mimic single-shot average
/// overtakes the one-detector direct-measurement average. Log-spaced
/// scan (32 points per decade) to bracket, then bisection to 1e-4
/// absolute tolerance in n_bar. Empty optional when no sign change is
/// bracketed in the interval.
inline std::optional<CrossoverResult> n_min_crossover(double eta, double kappa,
                                                      double n_bar_B,
                                                      double lo = 0.01,
                                                      double hi = 100.0) {
  if (!(lo > 0.0 && hi > lo))
    throw std::invalid_argument("need 0 < lo < hi");
  const auto diff = [&](double nbar) {
    SystemParams p{eta, kappa, nbar, n_bar_B, 0.5};
    return p_rc_average(p) - p_dm_average(p);
  };

  const double decades = std::log10(hi / lo);
  const std::size_t scan_points =
      std::max<std::size_t>(3, std::size_t(std::ceil(32.0 * decades)) + 1);

  std::optional<CrossoverResult> result;
  double prev_x = lo, prev_f = diff(lo);
  int crossings = 0;
  for (std::size_t i = 1; i < scan_points; ++i) {
    const double x =
        lo * std::pow(10.0, decades * double(i) / double(scan_points - 1));
    const double f = diff(x);
    if ((prev_f <= 0.0 && f > 0.0) || (prev_f >= 0.0 && f < 0.0)) {
      ++crossings;
      if (!result) {
        double a = prev_x, b = x, fa = prev_f;
        while (b - a > 1e-5) {
          const double m = 0.5 * (a + b);
          const double fm = diff(m);
          if ((fa <= 0.0) == (fm <= 0.0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        result = CrossoverResult{0.5 * (a + b), false};
      }
    }
    prev_x = x;
    prev_f = f;
  }
  if (result && crossings > 1) result->multiple_crossings = true;
  return result;
}

struct CrossoverPoint {
  double n_bar_B;
  std::optional<CrossoverResult> crossover;
};

/// n_min_crossover per background grid point.
inline std::vector<CrossoverPoint> crossover_curve(
    double eta, double kappa, const std::vector<double>& n_bar_B_grid,
    double lo = 0.01, double hi = 100.0) {
  if (n_bar_B_grid.empty())
    throw std::invalid_argument("n_bar_B grid must be nonempty");
  std::vector<CrossoverPoint> out;
  out.reserve(n_bar_B_grid.size());
  for (double nb : n_bar_B_grid)
    out.push_back({nb, n_min_crossover(eta, kappa, nb, lo, hi)});
  return out;
}

}  // namespace qillum
