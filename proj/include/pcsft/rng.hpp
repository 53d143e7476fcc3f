#pragma once

// Counter-based random streams. Every Monte Carlo trial draws from its own
// stream keyed by (master seed, trial index), so results do not depend on how
// trials are partitioned across workers.

#include <array>
#include <cstdint>
#include <limits>

namespace pcsft {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

struct RandomSeed {
  std::uint64_t master = 0;
};

/// Sequential view of one counter-based stream. Satisfies
/// UniformRandomBitGenerator with 64-bit output.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(RandomSeed seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

 private:
  void refill();

  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pcsft
