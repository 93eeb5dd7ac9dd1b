#include "tsb/rng.hpp"

#include <cmath>
#include <numbers>

#include "tsb/errors.hpp"

namespace tsb {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x00000100000001B3ull;
  }
  return h;
}

std::uint64_t rotl(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}

std::uint64_t mix_identity(std::uint64_t master_seed, std::string_view label,
                           std::uint64_t index) {
  std::uint64_t x = master_seed;
  std::uint64_t acc = splitmix64(x);
  x = acc ^ fnv1a64(label);
  acc = splitmix64(x);
  x = acc ^ index;
  return splitmix64(x);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::string label,
                     std::uint64_t index)
    : master_seed_(master_seed), label_(std::move(label)), index_(index) {
  std::uint64_t x = mix_identity(master_seed_, label_, index_);
  for (auto& word : state_) word = splitmix64(x);
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

std::uint64_t RngStream::identity_digest() const {
  return mix_identity(master_seed_, label_, index_);
}

// xoshiro256++
std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() { return 1.0 - next_double(); }

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform_pos()));
  const double angle = 2.0 * std::numbers::pi * next_double();
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
  if (bound == 0) throw DomainError("next_below: bound must be nonzero");
  // rejection keeps the draw exactly uniform
  const std::uint64_t threshold = (-bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

RngStream RngStream::substream(std::string_view label,
                               std::uint64_t index) const {
  return RngStream(identity_digest(), std::string(label), index);
}

}  // namespace tsb
