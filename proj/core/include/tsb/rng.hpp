#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tsb {

/// Deterministic random stream addressed by (master_seed, label, index).
///
/// The identity triple is hashed into the generator state, so equal triples
/// produce equal sequences on every platform and under any thread layout,
/// and distinct triples produce statistically independent streams. Parallel
/// code must give each task its own stream (usually via substream) instead
/// of sharing one.
class RngStream {
 public:
  RngStream() : RngStream(0, "", 0) {}
  RngStream(std::uint64_t master_seed, std::string label, std::uint64_t index);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double next_double();

  /// Uniform on (0, 1]; never returns zero (safe under log).
  double uniform_pos();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

  /// Unbiased integer in [0, bound); bound must be nonzero.
  std::uint64_t next_below(std::uint64_t bound);

  /// Independent child stream; the parent is not advanced.
  RngStream substream(std::string_view label, std::uint64_t index) const;

  std::uint64_t master_seed() const { return master_seed_; }
  const std::string& label() const { return label_; }
  std::uint64_t index() const { return index_; }

 private:
  std::uint64_t master_seed_ = 0;
  std::string label_;
  std::uint64_t index_ = 0;
  std::uint64_t state_[4] = {0, 0, 0, 0};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;

  std::uint64_t identity_digest() const;
};

}  // namespace tsb
