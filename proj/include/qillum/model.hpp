#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qillum {

enum class Hypothesis { absent, present };

/// Physical configuration shared by every protocol.
///
/// eta      — threshold-detector efficiency (idler and signal detectors)
/// kappa    — object reflectance: probability that a transmitted signal
///            photon is scattered into the signal-detector mode
/// n_bar    — mean signal photons per pulse (ensemble average for the
///            random-intensity and TMSV protocols, exact for fixed pulses)
/// n_bar_B  — effective mean background photons per time-bin at the
///            signal detector (dark counts already folded in, if any)
/// prior_present — prior probability that the object is present
struct SystemParams {
  double eta = 0.9;
  double kappa = 0.1;
  double n_bar = 1.0;
  double n_bar_B = 3.0;
  double prior_present = 0.5;
};

inline constexpr int kMaxIdlerDetectors = 16;

/// Transmit/measure strategy. The TMSV variant splits the idler evenly
/// onto `idler_detectors` threshold detectors.
struct Protocol {
  enum class Kind { fixed_coherent, random_coherent, tmsv_direct };

  Kind kind = Kind::random_coherent;
  int idler_detectors = 1;  // meaningful for tmsv_direct only

  static Protocol fixed_coherent() { return {Kind::fixed_coherent, 1}; }
  static Protocol random_coherent() { return {Kind::random_coherent, 1}; }
  static Protocol tmsv_direct(int detectors) {
    if (detectors < 1 || detectors > kMaxIdlerDetectors)
      throw std::invalid_argument(
          "idler_detectors out of range [1, " +
          std::to_string(kMaxIdlerDetectors) + "]: got " +
          std::to_string(detectors));
    return {Kind::tmsv_direct, detectors};
  }

  const char* name() const {
    switch (kind) {
      case Kind::fixed_coherent: return "fixed";
      case Kind::random_coherent: return "mimic";
      case Kind::tmsv_direct: return "tmsv";
    }
    return "?";
  }
};

namespace detail {
inline void check_finite(double v, const char* field) {
  if (!std::isfinite(v))
    throw std::invalid_argument(std::string(field) + " must be finite");
}
}  // namespace detail

/// Returns the parameters unchanged when every invariant holds; throws
/// std::invalid_argument naming the offending field otherwise. Idempotent.
inline SystemParams validate_params(const SystemParams& p) {
  detail::check_finite(p.eta, "eta");
  detail::check_finite(p.kappa, "kappa");
  detail::check_finite(p.n_bar, "n_bar");
  detail::check_finite(p.n_bar_B, "n_bar_B");
  detail::check_finite(p.prior_present, "prior_present");
  if (!(p.eta > 0.0 && p.eta <= 1.0))
    throw std::invalid_argument("eta out of range (0,1]: got " +
                                std::to_string(p.eta));
  if (!(p.kappa >= 0.0 && p.kappa < 1.0))
    throw std::invalid_argument("kappa out of range [0,1): got " +
                                std::to_string(p.kappa));
  if (!(p.n_bar > 0.0))
    throw std::invalid_argument("n_bar out of range (0,inf): got " +
                                std::to_string(p.n_bar));
  if (!(p.n_bar_B >= 0.0))
    throw std::invalid_argument("n_bar_B out of range [0,inf): got " +
                                std::to_string(p.n_bar_B));
  if (!(p.prior_present >= 0.0 && p.prior_present <= 1.0))
    throw std::invalid_argument("prior_present out of range [0,1]: got " +
                                std::to_string(p.prior_present));
  return p;
}

/// Piecewise-constant effective reflectance kappa(r) over 1-based pulse
/// indices. Covers the constant-present, constant-absent and
/// appear-at-pulse-R situations.
class Scenario {
 public:
  struct Step {
    std::uint64_t first_pulse;  // 1-based index where this reflectance starts
    double kappa;
  };

  static Scenario constant(double kappa) {
    return Scenario({{1, checked(kappa)}});
  }
  static Scenario absent() { return constant(0.0); }

  /// Object absent for pulses r < appear_pulse, reflectance `kappa` from
  /// pulse `appear_pulse` on.
  static Scenario appearing_at(std::uint64_t appear_pulse, double kappa) {
    if (appear_pulse <= 1) return constant(kappa);
    return Scenario({{1, 0.0}, {appear_pulse, checked(kappa)}});
  }

  double kappa_at(std::uint64_t pulse) const {
    double k = steps_.front().kappa;
    for (const Step& s : steps_) {
      if (s.first_pulse <= pulse) k = s.kappa;
      else break;
    }
    return k;
  }

  const std::vector<Step>& steps() const { return steps_; }

 private:
  explicit Scenario(std::vector<Step> steps) : steps_(std::move(steps)) {}

  static double checked(double kappa) {
    if (!(kappa >= 0.0 && kappa < 1.0))
      throw std::invalid_argument("scenario kappa out of range [0,1): got " +
                                  std::to_string(kappa));
    return kappa;
  }

  std::vector<Step> steps_;
};

}  // namespace qillum
