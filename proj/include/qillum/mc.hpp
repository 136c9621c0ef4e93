#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "qillum/bayes.hpp"
#include "qillum/detection.hpp"
#include "qillum/model.hpp"
#include "qillum/photonstats.hpp"
#include "qillum/rng.hpp"

namespace qillum {

/// Per-pulse posterior trace of one run, sampled on a pulse grid.
struct TrajectoryRecord {
  std::vector<std::uint64_t> pulse_index;
  std::vector<double> posteriors;
  std::uint64_t master_seed = 0;
  std::uint64_t run_index = 0;
};

/// Pointwise ensemble average of trajectories over Monte Carlo runs.
struct EnsembleCurve {
  std::vector<std::uint64_t> pulse_index;
  std::vector<double> mean;
  std::vector<double> variance;  // sample variance per grid point
  std::uint64_t runs = 0;
};

inline std::vector<std::uint64_t> make_linear_grid(std::uint64_t pulses,
                                                   std::uint64_t stride) {
  if (pulses == 0) throw std::invalid_argument("pulses must be >= 1");
  if (stride == 0) stride = std::max<std::uint64_t>(1, pulses / 100);
  std::vector<std::uint64_t> grid;
  for (std::uint64_t p = stride; p < pulses; p += stride) grid.push_back(p);
  grid.push_back(pulses);
  return grid;
}

inline std::vector<std::uint64_t> make_log_grid(std::uint64_t pulses,
                                                std::size_t points) {
  if (pulses == 0) throw std::invalid_argument("pulses must be >= 1");
  points = std::max<std::size_t>(points, 2);
  std::vector<std::uint64_t> grid;
  const double lmax = std::log(double(pulses));
  for (std::size_t i = 0; i < points; ++i) {
    const double v = std::exp(lmax * double(i) / double(points - 1));
    const auto p = std::min<std::uint64_t>(
        pulses, std::max<std::uint64_t>(1, std::uint64_t(std::llround(v))));
    if (grid.empty() || p > grid.back()) grid.push_back(p);
  }
  if (grid.back() != pulses) grid.push_back(pulses);
  return grid;
}

struct McOptions {
  std::uint64_t runs = 1;
  std::uint64_t pulses = 1;
  std::uint64_t master_seed = 0;
  std::uint64_t stride = 0;     // 0 = auto (about 100 grid points)
  std::size_t log_points = 0;   // nonzero selects a log-spaced grid
  int threads = 0;              // 0 = hardware concurrency
  std::uint64_t stream_ctx = stream_context::kSimulation;
  std::atomic<std::uint64_t>* progress_pulses = nullptr;  // optional
};

namespace detail {

inline constexpr std::uint64_t kProgressChunk = 1u << 20;

/// One full trajectory on a fixed grid. Outcomes are drawn from the
/// truth model (the scenario's kappa(r)); the posterior is updated with
/// the protocol's likelihoods at the assumed system parameters.
inline void run_trajectory(const LikelihoodModel& model,
                           const Scenario& scenario, std::uint64_t pulses,
                           std::span<const std::uint64_t> grid,
                           RandomStream& stream, double* out,
                           std::atomic<std::uint64_t>* progress) {
  const SystemParams& prm = model.params();
  const ChannelConstants& cc = model.channel();
  const Protocol protocol = model.protocol();
  const int ndet = protocol.idler_detectors;

  PosteriorState state = PosteriorState::from_prior(prm.prior_present);
  const double la_noclick = -cc.log_z;
  const double la_click = std::log(-std::expm1(-cc.log_z));

  // TMSV per-pulse tables (idler statistics are hypothesis-independent).
  std::vector<double> count_cdf;
  std::vector<double> d_click, d_noclick;
  if (protocol.kind == Protocol::Kind::tmsv_direct) {
    const auto pmf = idler_click_count_pmf(prm.n_bar, prm.eta, ndet);
    double acc = 0.0;
    for (double p : pmf) count_cdf.push_back(acc += p);
    count_cdf.back() = 1.0;
    for (int k = 0; k <= ndet; ++k) {
      d_click.push_back(model.tmsv(true, k, Hypothesis::present) - la_click);
      d_noclick.push_back(model.tmsv(false, k, Hypothesis::present) -
                          la_noclick);
    }
  }

  std::size_t gi = 0;
  std::uint64_t since_progress = 0;
  std::array<int, kMaxIdlerDetectors> det_idx{};

  const auto& steps = scenario.steps();
  for (std::size_t si = 0; si < steps.size(); ++si) {
    const std::uint64_t seg_begin = steps[si].first_pulse;
    const std::uint64_t seg_end =
        (si + 1 < steps.size()) ? steps[si + 1].first_pulse - 1 : pulses;
    if (seg_begin > pulses) break;
    const double kappa_truth = steps[si].kappa;
    const double gamma_truth = prm.eta * kappa_truth / cc.z;

    // truth click probabilities for this segment
    double p_click_fixed = 0.0;
    std::vector<double> p_click_tmsv;
    if (protocol.kind == Protocol::Kind::fixed_coherent) {
      p_click_fixed = -std::expm1(-(gamma_truth * prm.n_bar + cc.log_z));
    } else if (protocol.kind == Protocol::Kind::tmsv_direct) {
      for (int k = 0; k <= ndet; ++k)
        p_click_tmsv.push_back(
            -std::expm1(tmsv_conditional(prm.eta, kappa_truth, prm.n_bar,
                                         prm.n_bar_B, ndet, k)
                            .log_noclick));
    }
    const double d_fixed_click =
        model.coherent(true, prm.n_bar, Hypothesis::present) - la_click;
    const double d_fixed_noclick = -cc.gamma * prm.n_bar;

    for (std::uint64_t r = seg_begin; r <= std::min(seg_end, pulses); ++r) {
      double delta = 0.0;
      switch (protocol.kind) {
        case Protocol::Kind::random_coherent: {
          const double lam = stream.next_exponential(prm.n_bar);
          const bool click = stream.next_double() <
                             -std::expm1(-(gamma_truth * lam + cc.log_z));
          delta = click ? std::log(-std::expm1(-(cc.gamma * lam + cc.log_z))) -
                              la_click
                        : -cc.gamma * lam;
          break;
        }
        case Protocol::Kind::fixed_coherent: {
          const bool click = stream.next_double() < p_click_fixed;
          delta = click ? d_fixed_click : d_fixed_noclick;
          break;
        }
        case Protocol::Kind::tmsv_direct: {
          const double u = stream.next_double();
          int count = 0;
          while (count < ndet && u >= count_cdf[count]) ++count;
          if (ndet > 1 && count > 0 && count < ndet) {
            // assign which detectors fired (uniform subset; by symmetry
            // the identity never enters the posterior)
            for (int i = 0; i < ndet; ++i) det_idx[i] = i;
            for (int i = 0; i < count; ++i) {
              const auto j = i + int(stream.next_below(ndet - i));
              std::swap(det_idx[i], det_idx[j]);
            }
          }
          const bool click = stream.next_double() < p_click_tmsv[count];
          delta = click ? d_click[count] : d_noclick[count];
          break;
        }
      }
      state = update(state, delta, 0.0);
      if (gi < grid.size() && r == grid[gi]) out[gi++] = posterior(state);
      if (progress && ++since_progress == kProgressChunk) {
        progress->fetch_add(kProgressChunk, std::memory_order_relaxed);
        since_progress = 0;
      }
    }
  }
  if (progress && since_progress)
    progress->fetch_add(since_progress, std::memory_order_relaxed);
}

}  // namespace detail

/// Simulate one run. Fully deterministic given (master_seed, run_index):
/// the stream is derived by counter splitting, so results do not depend
/// on scheduling or worker count.
inline TrajectoryRecord simulate_trajectory(Protocol protocol,
                                            const SystemParams& params,
                                            const Scenario& scenario,
                                            std::uint64_t master_seed,
                                            std::uint64_t run_index,
                                            std::uint64_t pulses,
                                            std::uint64_t stride = 0) {
  TrajectoryRecord rec;
  rec.master_seed = master_seed;
  rec.run_index = run_index;
  rec.pulse_index = make_linear_grid(pulses, stride);
  rec.posteriors.resize(rec.pulse_index.size());
  const LikelihoodModel model(protocol, params);
  RandomStream stream(master_seed, stream_context::kSimulation, run_index);
  detail::run_trajectory(model, scenario, pulses, rec.pulse_index, stream,
                         rec.posteriors.data(), nullptr);
  return rec;
}

/// Pointwise mean posterior over `runs` independent trajectories.
/// The reduction runs in ascending run order after all workers join, so
/// the curve is byte-identical for any thread count.
inline EnsembleCurve ensemble_average(Protocol protocol,
                                      const SystemParams& params,
                                      const Scenario& scenario,
                                      const McOptions& opt) {
  if (opt.runs == 0) throw std::invalid_argument("runs must be >= 1");
  EnsembleCurve curve;
  curve.pulse_index = opt.log_points
                          ? make_log_grid(opt.pulses, opt.log_points)
                          : make_linear_grid(opt.pulses, opt.stride);
  curve.runs = opt.runs;
  const std::size_t g = curve.pulse_index.size();

  const LikelihoodModel model(protocol, params);
  std::vector<double> rows(opt.runs * g);

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned nthreads = std::min<std::uint64_t>(
      opt.threads > 0 ? unsigned(opt.threads) : hw, opt.runs);

  std::atomic<std::uint64_t> next_run{0};
  auto worker = [&]() {
    for (;;) {
      const std::uint64_t r = next_run.fetch_add(1);
      if (r >= opt.runs) return;
      RandomStream stream(opt.master_seed, opt.stream_ctx, r);
      detail::run_trajectory(model, scenario, opt.pulses, curve.pulse_index,
                             stream, rows.data() + r * g,
                             opt.progress_pulses);
    }
  };
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  curve.mean.assign(g, 0.0);
  curve.variance.assign(g, 0.0);
  for (std::uint64_t r = 0; r < opt.runs; ++r)
    for (std::size_t i = 0; i < g; ++i) curve.mean[i] += rows[r * g + i];
  for (std::size_t i = 0; i < g; ++i) curve.mean[i] /= double(opt.runs);
  if (opt.runs > 1) {
    for (std::uint64_t r = 0; r < opt.runs; ++r)
      for (std::size_t i = 0; i < g; ++i) {
        const double d = rows[r * g + i] - curve.mean[i];
        curve.variance[i] += d * d;
      }
    for (std::size_t i = 0; i < g; ++i)
      curve.variance[i] /= double(opt.runs - 1);
  }
  return curve;
}

/// Smallest grid pulse index whose mean posterior reaches the threshold.
inline std::optional<std::uint64_t> shots_to_confidence(
    const EnsembleCurve& curve, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("threshold out of range (0,1)");
  for (std::size_t i = 0; i < curve.pulse_index.size(); ++i)
    if (curve.mean[i] >= threshold) return curve.pulse_index[i];
  return std::nullopt;
}

}  // namespace qillum
