#pragma once

#include <cstdint>
#include <vector>

namespace selpred {

/// Counter-based splittable random stream. The state is a counter advanced by
/// a fixed odd increment and each output is a finalizer hash of the counter
/// (SplitMix64), so streams derived from (seed, key) pairs are reproducible
/// across platforms and independent of call interleaving in other streams.
/// Every experiment report records the 64-bit master seed.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double();

  /// Uniform integer in [0, bound); rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t bound);

  /// Standard normal via Box-Muller (no std::normal_distribution, whose
  /// output is implementation-defined).
  double next_gaussian();

  /// Derive an independent child stream identified by `key`. Children of the
  /// same parent with distinct keys never collide.
  RngStream split(std::uint64_t key) const;

  /// Sample k distinct indices from {0,...,n-1} (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::uint64_t counter_;
  bool have_spare_gaussian_ = false;
  double spare_gaussian_ = 0.0;
};

} // namespace selpred
