#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace qillum {

/// Philox4x64-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3", SC 2011). Every (key, counter) pair maps
/// to an independent 256-bit block, so per-run streams can be derived by
/// counter splitting with no shared state between workers.
struct Philox4x64 {
  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

  using Block = std::array<std::uint64_t, 4>;

  static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                      std::uint64_t& lo) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
  }

  static Block block(Block ctr, std::uint64_t k0, std::uint64_t k1) {
    for (int round = 0; round < 10; ++round) {
      std::uint64_t hi0, lo0, hi1, lo1;
      mulhilo(kMul0, ctr[0], hi0, lo0);
      mulhilo(kMul1, ctr[2], hi1, lo1);
      ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return ctr;
  }
};

/// One sequential random stream addressed by (master_seed, context, run).
/// Streams with distinct addresses are statistically independent; a stream
/// is owned by a single worker at a time.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t context,
               std::uint64_t run_index)
      : key0_(master_seed), key1_(0x71696c6c756d2e63ull), run_(run_index),
        context_(context) {}

  std::uint64_t next_u64() {
    if (pos_ == 4) {
      buf_ = Philox4x64::block({block_++, run_, context_, 0}, key0_, key1_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  /// Uniform on [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe to pass through log().
  double next_open_double() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double next_exponential(double mean) {
    return -mean * std::log(next_open_double());
  }

  bool next_bernoulli(double p_true) { return next_double() < p_true; }

  /// Uniform integer in [0, n) via 128-bit multiply-shift.
  std::uint64_t next_below(std::uint64_t n) {
    const unsigned __int128 p =
        static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(p >> 64);
  }

 private:
  std::uint64_t key0_, key1_;
  std::uint64_t run_, context_;
  std::uint64_t block_ = 0;
  Philox4x64::Block buf_{};
  int pos_ = 4;
};

/// Stream contexts keep protocol draws, truth draws and test helpers on
/// disjoint counter planes.
namespace stream_context {
inline constexpr std::uint64_t kSimulation = 1;
inline constexpr std::uint64_t kTruthCoin = 2;
}  // namespace stream_context

}  // namespace qillum
