#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>
#include <vector>

#include "qillum/detection.hpp"
#include "qillum/model.hpp"
#include "qillum/photonstats.hpp"

namespace qillum {

/// Symmetric log-odds clamp: 3e7 informative pulses would overflow
/// probability-space arithmetic, so the walk is capped where the
/// posterior is already saturated beyond double resolution.
inline constexpr double kLogOddsClamp = 700.0;

/// Posterior over the object hypothesis in log-odds form:
/// log_odds = ln P(present | record) / P(absent | record).
struct PosteriorState {
  double log_odds = 0.0;

  static PosteriorState from_prior(double prior_present) {
    if (!(prior_present >= 0.0 && prior_present <= 1.0))
      throw std::invalid_argument("prior out of range [0,1]");
    const double lo =
        std::log(prior_present) - std::log1p(-prior_present);
    return {std::clamp(std::isnan(lo) ? 0.0 : lo, -kLogOddsClamp,
                       kLogOddsClamp)};
  }
};

/// Map log-odds back to a probability in (0, 1); never returns exactly
/// 0 or 1 even at the clamp (exp(-700) is still a normal double).
inline double posterior(const PosteriorState& state) {
  const double p = 1.0 / (1.0 + std::exp(-state.log_odds));
  return std::min(p, 1.0 - 1e-15);
}

/// One Bayes step in log-odds form; algebraically identical to the
/// probability-space update rule.
inline PosteriorState update(PosteriorState state, double ll_present,
                             double ll_absent) {
  if (!std::isfinite(ll_present) || !std::isfinite(ll_absent))
    throw std::invalid_argument("non-finite log-likelihood");
  const double lo = state.log_odds + (ll_present - ll_absent);
  return {std::clamp(lo, -kLogOddsClamp, kLogOddsClamp)};
}

/// Evidence from one pulse: the signal-detector outcome plus the
/// protocol-specific conditioning data (pulse intensity for the
/// coherent-family protocols, the idler click pattern for TMSV).
struct PulseEvidence {
  bool click = false;
  std::variant<double, ClickPattern> pulse_info;

  static PulseEvidence coherent(bool click, double lambda) {
    return {click, lambda};
  }
  static PulseEvidence tmsv(bool click, ClickPattern pattern) {
    return {click, pattern};
  }
};

/// Caches the channel constants and the (pulse-independent) TMSV
/// conditional tables for one (protocol, params) pair.
///
/// Log-likelihoods are assembled analytically: for no-click under
/// "present" as -log z - gamma*lambda, for click via expm1/log1p, so
/// nothing degrades when gamma*lambda ~ 1e-8.
class LikelihoodModel {
 public:
  LikelihoodModel(Protocol protocol, const SystemParams& params)
      : protocol_(protocol),
        params_(validate_params(params)),
        cc_(ChannelConstants::from(params)) {
    log_click_absent_ = std::log(-std::expm1(-cc_.log_z));
    if (protocol_.kind == Protocol::Kind::tmsv_direct) {
      const int n = protocol_.idler_detectors;
      tmsv_.reserve(n + 1);
      for (int k = 0; k <= n; ++k)
        tmsv_.push_back(detail::tmsv_conditional(
            params_.eta, params_.kappa, params_.n_bar, params_.n_bar_B, n, k));
    }
  }

  /// Coherent-family likelihood for a pulse of mean photon number lambda.
  double coherent(bool click, double lambda, Hypothesis hyp) const {
    if (hyp == Hypothesis::absent)
      return click ? log_click_absent_ : -cc_.log_z;
    const double exponent = cc_.gamma * lambda + cc_.log_z;
    return click ? std::log(-std::expm1(-exponent)) : -exponent;
  }

  /// TMSV likelihood given the idler click count.
  double tmsv(bool click, int click_count, Hypothesis hyp) const {
    if (hyp == Hypothesis::absent)
      return click ? log_click_absent_ : -cc_.log_z;
    const TmsvConditional& c = tmsv_.at(click_count);
    return click ? c.log_click : c.log_noclick;
  }

  double log_likelihood(const PulseEvidence& ev, Hypothesis hyp) const {
    switch (protocol_.kind) {
      case Protocol::Kind::fixed_coherent:
      case Protocol::Kind::random_coherent: {
        const double* lambda = std::get_if<double>(&ev.pulse_info);
        if (!lambda)
          throw std::invalid_argument(
              "evidence carries a click pattern but the protocol is coherent");
        return coherent(ev.click, *lambda, hyp);
      }
      case Protocol::Kind::tmsv_direct: {
        const ClickPattern* pat = std::get_if<ClickPattern>(&ev.pulse_info);
        if (!pat)
          throw std::invalid_argument(
              "evidence carries an intensity but the protocol is TMSV");
        if (pat->detectors != protocol_.idler_detectors)
          throw std::invalid_argument("pattern/detector count mismatch");
        return tmsv(ev.click, pat->click_count(), hyp);
      }
    }
    throw std::logic_error("unreachable");
  }

  const ChannelConstants& channel() const { return cc_; }
  const Protocol& protocol() const { return protocol_; }
  const SystemParams& params() const { return params_; }

 private:
  Protocol protocol_;
  SystemParams params_;
  ChannelConstants cc_;
  double log_click_absent_;
  std::vector<TmsvConditional> tmsv_;
};

/// Natural-log likelihood of one pulse outcome under a hypothesis.
inline double log_likelihood(Protocol protocol, const SystemParams& params,
                             const PulseEvidence& evidence, Hypothesis hyp) {
  return LikelihoodModel(protocol, params).log_likelihood(evidence, hyp);
}

}  // namespace qillum
