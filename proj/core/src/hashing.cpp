#include "tsb/hashing.hpp"

#include <bit>
#include <cstring>

namespace tsb {

namespace {
constexpr unsigned __int128 kPrime =
    (static_cast<unsigned __int128>(0x0000000001000000ull) << 64) | 0x000000000000013Bull;
}

Hasher& Hasher::bytes(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    state_ ^= p[i];
    state_ *= kPrime;
  }
  return *this;
}

Hasher& Hasher::text(std::string_view s) {
  u64(s.size());
  return bytes(s.data(), s.size());
}

Hasher& Hasher::u64(std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  return bytes(buf, 8);
}

Hasher& Hasher::f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }

Digest128 Hasher::digest() const {
  return Digest128{static_cast<std::uint64_t>(state_ >> 64),
                   static_cast<std::uint64_t>(state_)};
}

std::string Digest128::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out(32, '0');
  for (int i = 0; i < 16; ++i) {
    const std::uint64_t word = i < 8 ? hi : lo;
    const int shift = 8 * (7 - (i % 8));
    const unsigned byte = static_cast<unsigned>((word >> shift) & 0xFF);
    out[2 * i] = digits[byte >> 4];
    out[2 * i + 1] = digits[byte & 0xF];
  }
  return out;
}

}  // namespace tsb
