#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "qillum/photonstats.hpp"

using namespace qillum;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("thermal pmf values and certification") {
  const PhotonDistribution vac = thermal_pmf(0.0);
  REQUIRE(vac.probs.size() == 1);
  CHECK(vac.probs[0] == 1.0);
  CHECK(vac.tail_mass == 0.0);

  const PhotonDistribution one = thermal_pmf(1.0);
  CHECK_THAT(one.probs[0], WithinRel(0.5, 1e-15));
  CHECK_THAT(one.probs[1], WithinRel(0.25, 1e-15));
  CHECK_THAT(one.probs[2], WithinRel(0.125, 1e-15));

  for (double m : {0.05, 1.0, 3.0, 22.0}) {
    const PhotonDistribution d = thermal_pmf(m);
    CHECK(d.tail_mass <= 1e-12);
    CHECK_THAT(d.sum() + d.tail_mass, WithinAbs(1.0, 1e-12));
    CHECK_THAT(d.mean(), WithinAbs(m, 1e-9 * (1.0 + m)));
    for (double p : d.probs) CHECK(p >= 0.0);
  }
}

TEST_CASE("poisson pmf values and certification") {
  const PhotonDistribution vac = poisson_pmf(0.0);
  REQUIRE(vac.probs.size() == 1);
  CHECK(vac.probs[0] == 1.0);

  const PhotonDistribution one = poisson_pmf(1.0);
  CHECK_THAT(one.probs[0], WithinRel(std::exp(-1.0), 1e-14));
  CHECK_THAT(one.probs[1], WithinRel(std::exp(-1.0), 1e-14));

  for (double lam : {0.3, 1.0, 20.0, 120.0}) {
    const PhotonDistribution d = poisson_pmf(lam);
    CHECK(d.tail_mass <= 1e-12);
    CHECK_THAT(d.sum() + d.tail_mass, WithinAbs(1.0, 1e-12));
    CHECK_THAT(d.mean(), WithinAbs(lam, 1e-9 * (1.0 + lam)));
  }
}

TEST_CASE("thermal geometric sum closed form") {
  CHECK(thermal_geometric_sum(2.7, 1.0) == 1.0);
  CHECK_THAT(thermal_geometric_sum(2.7, 0.0), WithinRel(1.0 / 3.7, 1e-15));
  CHECK_THAT(thermal_geometric_sum(1.0, 0.5), WithinRel(2.0 / 3.0, 1e-15));
  // against the truncated sum
  for (double m : {0.2, 1.0, 7.0}) {
    for (double y : {0.0, 0.37, 0.81, 1.0}) {
      const PhotonDistribution d = thermal_pmf(m, 1e-14);
      double s = 0.0, ypow = 1.0;
      for (double p : d.probs) {
        s += p * ypow;
        ypow *= y;
      }
      CHECK_THAT(thermal_geometric_sum(m, y), WithinAbs(s, 1e-11));
    }
  }
}

TEST_CASE("mimic intensity sampler tails and mean") {
  RandomStream s(555, 1, 0);
  const int n = 400000;
  int ge2_half = 0, ge2_one = 0;
  double sum_one = 0.0;
  for (int i = 0; i < n; ++i) {
    if (sample_mimic_intensity(0.5, s) >= 2.0) ++ge2_half;
    const double lam = sample_mimic_intensity(1.0, s);
    sum_one += lam;
    if (lam >= 2.0) ++ge2_one;
  }
  const double p_half = std::exp(-4.0);  // 0.0183
  const double p_one = std::exp(-2.0);   // 0.1353
  const double sd_half = std::sqrt(p_half * (1 - p_half) / n);
  const double sd_one = std::sqrt(p_one * (1 - p_one) / n);
  CHECK(std::fabs(double(ge2_half) / n - p_half) < 4.0 * sd_half);
  CHECK(std::fabs(double(ge2_one) / n - p_one) < 4.0 * sd_one);
  CHECK(std::fabs(sum_one / n - 1.0) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("idler silent probability: closed form and exact enumeration") {
  CHECK(idler_silent_prob(0, 3, 0.9, 5) == 1.0);
  CHECK_THAT(idler_silent_prob(1, 1, 0.9, 3), WithinRel(std::pow(0.1, 3), 1e-13));
  CHECK_THAT(idler_silent_prob(1, 2, 0.9, 2), WithinRel(0.3025, 1e-13));

  // exact rational equality against multinomial enumeration over
  // detector bins + loss bin, for eta in {9/10, 3/4}
  for (auto [eta_num, eta_den] : {std::pair{9, 10}, std::pair{3, 4}}) {
    for (int N = 1; N <= 4; ++N) {
      for (int j = 0; j <= N; ++j) {
        for (int n = 0; n <= 8; ++n) {
          const auto frac =
              oracles::multinomial_silent_prob(j, N, eta_num, eta_den, n);
          // closed form numerator over the same denominator:
          // (eta_den*N - eta_num*j)^n / (eta_den*N)^n
          std::uint64_t closed_num = 1;
          const std::uint64_t base =
              std::uint64_t(eta_den) * std::uint64_t(N) -
              std::uint64_t(eta_num) * std::uint64_t(j);
          for (int i = 0; i < n; ++i) closed_num *= base;
          REQUIRE(frac.num == closed_num);
          const double closed =
              idler_silent_prob(j, N, double(eta_num) / eta_den, n);
          CHECK_THAT(double(frac.num) / double(frac.den),
                     WithinAbs(closed, 1e-13));
        }
      }
    }
  }
}

namespace {

// independent truncated-sum route: thermal pmf x inclusion-exclusion of
// idler_silent_prob, photon-by-photon
double marginal_truncated_oracle(double n_bar, double eta, int N, int clicks) {
  const PhotonDistribution d = thermal_pmf(n_bar, 1e-13);
  double total = 0.0;
  for (std::size_t n = 0; n < d.probs.size(); ++n) {
    double cond = 0.0;
    double binom = 1.0;
    for (int t = 0; t <= clicks; ++t) {
      if (t > 0) binom *= double(clicks - t + 1) / double(t);
      const double sign = (t % 2) ? -1.0 : 1.0;
      cond += sign * binom * idler_silent_prob(N - clicks + t, N, eta, int(n));
    }
    total += d.probs[n] * cond;
  }
  return total;
}

}  // namespace

TEST_CASE("idler pattern marginals") {
  const double eta = 0.9, nbar = 1.0;
  // N=1
  CHECK_THAT(idler_pattern_marginal(nbar, eta, 1, ClickPattern::none(1)),
             WithinRel(1.0 / (1.0 + eta * nbar), 1e-14));
  CHECK_THAT(idler_pattern_marginal(nbar, eta, 1, ClickPattern::make(1, 1)),
             WithinRel(1.0 - 1.0 / (1.0 + eta * nbar), 1e-14));
  // N=2, exactly one named detector clicks
  const double one_of_two =
      idler_pattern_marginal(nbar, eta, 2, ClickPattern::make(0b01, 2));
  CHECK_THAT(one_of_two, WithinRel(0.16333938294010897, 1e-12));
  CHECK_THAT(one_of_two, WithinAbs(marginal_truncated_oracle(nbar, eta, 2, 1), 1e-10));
  // depends only on click count
  CHECK(one_of_two ==
        idler_pattern_marginal(nbar, eta, 2, ClickPattern::make(0b10, 2)));

  // truncated-sum oracle across N and click counts
  for (int N : {1, 2, 4}) {
    for (int k = 0; k <= N; ++k) {
      const std::uint32_t mask = k ? (1u << k) - 1u : 0u;
      const double m =
          idler_pattern_marginal(0.7, 0.85, N, ClickPattern::make(mask, N));
      CHECK_THAT(m, WithinAbs(marginal_truncated_oracle(0.7, 0.85, N, k), 1e-10));
    }
  }
}

TEST_CASE("pattern completeness") {
  for (int N : {1, 2, 4}) {
    for (double eta : {0.2, 0.9, 1.0}) {
      for (double nbar : {0.5, 1.0, 20.0}) {
        double total = 0.0;
        for (std::uint32_t mask = 0; mask < (1u << N); ++mask)
          total +=
              idler_pattern_marginal(nbar, eta, N, ClickPattern::make(mask, N));
        CHECK_THAT(total, WithinAbs(1.0, 1e-12));
      }
    }
  }
}

TEST_CASE("conditional signal pmf reference means") {
  // one idler detector, eta=0.9, nbar=0.5
  const PhotonDistribution rho0 =
      conditional_signal_pmf(0.5, 0.9, 1, ClickPattern::none(1));
  CHECK_THAT(rho0.mean(), WithinAbs(0.5 * 0.1 / 1.45, 1e-10));
  const PhotonDistribution rho1 =
      conditional_signal_pmf(0.5, 0.9, 1, ClickPattern::make(1, 1));
  CHECK_THAT(rho1.mean(), WithinAbs(0.5 + 1.5 / 1.45, 1e-9));

  // eta -> 0: no conditioning without detection
  const PhotonDistribution flat =
      conditional_signal_pmf(1.0, 1e-9, 1, ClickPattern::none(1));
  const PhotonDistribution therm = thermal_pmf(1.0);
  for (std::size_t n = 0; n < std::min(flat.probs.size(), therm.probs.size());
       ++n)
    CHECK_THAT(flat.probs[n], WithinAbs(therm.probs[n], 1e-8));
  // and a click pattern becomes (numerically) impossible
  CHECK_THROWS_AS(conditional_signal_pmf(1.0, 0.0, 1, ClickPattern::make(1, 1)),
                  std::domain_error);
}

TEST_CASE("no-signaling mixture identity and mean bookkeeping") {
  for (int N : {1, 2, 4}) {
    const double eta = 0.9, nbar = 1.3;
    const PhotonDistribution therm = thermal_pmf(nbar, 1e-14);
    std::vector<double> mix(therm.probs.size(), 0.0);
    double mean_acc = 0.0, marg_acc = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << N); ++mask) {
      const auto pat = ClickPattern::make(mask, N);
      const double marg = idler_pattern_marginal(nbar, eta, N, pat);
      const PhotonDistribution cond =
          conditional_signal_pmf(nbar, eta, N, pat, 1e-14);
      for (std::size_t n = 0; n < mix.size() && n < cond.probs.size(); ++n)
        mix[n] += marg * cond.probs[n];
      mean_acc += marg * cond.mean();
      marg_acc += marg;
    }
    CHECK_THAT(marg_acc, WithinAbs(1.0, 1e-12));
    CHECK_THAT(mean_acc, WithinAbs(nbar, 1e-10));
    for (std::size_t n = 0; n < mix.size(); ++n)
      CHECK_THAT(mix[n], WithinAbs(therm.probs[n], 1e-10));
  }
}

TEST_CASE("g2(0) for thermal, poissonian and the mimic ensemble") {
  CHECK_THAT(g2_zero(thermal_pmf(1.0, 1e-15)), WithinAbs(2.0, 1e-9));
  CHECK_THAT(g2_zero(thermal_pmf(0.3, 1e-15)), WithinAbs(2.0, 1e-9));
  CHECK_THAT(g2_zero(poisson_pmf(1.0, 1e-15)), WithinAbs(1.0, 1e-9));
  CHECK_THAT(g2_zero(poisson_pmf(7.0, 1e-15)), WithinAbs(1.0, 1e-9));
  CHECK_THROWS_AS(g2_zero(PhotonDistribution{{1.0}, 0.0}), std::domain_error);

  // Monte Carlo mixture: Poisson photon numbers with exponentially
  // distributed intensity average to thermal statistics.
  RandomStream s(31337, 1, 0);
  std::vector<double> hist;
  const int pulses = 1000000;
  for (int i = 0; i < pulses; ++i) {
    const double lam = sample_mimic_intensity(1.0, s);
    const int n = oracles::poisson_sample(lam, s);
    if (std::size_t(n) >= hist.size()) hist.resize(n + 1, 0.0);
    hist[std::size_t(n)] += 1.0;
  }
  for (double& h : hist) h /= pulses;
  const double g2 = g2_zero(PhotonDistribution{hist, 0.0});
  CHECK_THAT(g2, WithinAbs(2.0, 0.03));
}

TEST_CASE("exponential-mixture of poissonians equals the thermal pmf") {
  for (double nbar : {0.5, 1.0, 3.0}) {
    const PhotonDistribution therm = thermal_pmf(nbar, 1e-14);
    for (int n = 0; n <= 30; ++n) {
      const double mixed = oracles::simpson(
          [nbar, n](double lam) {
            if (lam <= 0.0) return n == 0 ? 1.0 / nbar : 0.0;
            double logp = -lam + n * std::log(lam);
            for (int i = 2; i <= n; ++i) logp -= std::log(double(i));
            return std::exp(-lam / nbar) / nbar * std::exp(logp);
          },
          0.0, 40.0 * std::max(1.0, nbar) + 10.0 * n, 1e-12);
      const double expected =
          n < int(therm.probs.size()) ? therm.probs[std::size_t(n)] : 0.0;
      CHECK_THAT(mixed, WithinAbs(expected, 1e-8));
    }
  }
}
