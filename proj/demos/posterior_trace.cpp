// Minimal usage example: one random trajectory and a small ensemble
// average for each protocol at the reference parameters.
#include <cstdio>

#include "qillum/mc.hpp"

int main() {
  using namespace qillum;
  const SystemParams params{0.9, 0.1, 1.0, 3.0, 0.5};
  const Scenario truth = Scenario::constant(0.1);

  McOptions opt;
  opt.runs = 200;
  opt.pulses = 10000;
  opt.master_seed = 7;
  opt.stride = 2000;

  for (Protocol proto : {Protocol::fixed_coherent(), Protocol::random_coherent(),
                         Protocol::tmsv_direct(1)}) {
    const EnsembleCurve curve = ensemble_average(proto, params, truth, opt);
    std::printf("%-6s:", proto.name());
    for (std::size_t i = 0; i < curve.pulse_index.size(); ++i)
      std::printf("  P(%llu)=%.3f",
                  static_cast<unsigned long long>(curve.pulse_index[i]),
                  curve.mean[i]);
    std::printf("\n");
  }
  return 0;
}
