// Minimal usage example: sweep the mean photon number and print the two
// single-shot averages plus the crossover point.
#include <cstdio>

#include "qillum/analytic.hpp"

int main() {
  using namespace qillum;
  const double eta = 0.9, kappa = 0.1, nbarb = 3.0;

  std::printf("%8s %18s %18s\n", "nbar", "P_RC", "P_DM");
  for (double nbar : {0.25, 0.5, 1.0, 1.5, 2.0, 4.0}) {
    const SystemParams p{eta, kappa, nbar, nbarb, 0.5};
    std::printf("%8.2f %18.12f %18.12f\n", nbar, p_rc_average(p),
                p_dm_average(p));
  }

  const auto cross = n_min_crossover(eta, kappa, nbarb);
  if (cross)
    std::printf("\nmimic wins for nbar >= %.4f\n", cross->n_bar_min);
  return 0;
}
