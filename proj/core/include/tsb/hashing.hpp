#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace tsb {

struct Digest128 {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  std::string hex() const;
  friend bool operator==(const Digest128&, const Digest128&) = default;
};

/// Incremental FNV-1a (128-bit) over raw bytes; fields are framed with
/// their length so distinct field sequences cannot collide trivially.
class Hasher {
 public:
  Hasher& bytes(const void* data, std::size_t len);
  Hasher& text(std::string_view s);
  Hasher& u64(std::uint64_t v);
  Hasher& f64(double v);

  Digest128 digest() const;

 private:
  unsigned __int128 state_ = (static_cast<unsigned __int128>(0x6C62272E07BB0142ull) << 64) |
                             0x62B821756295C58Dull;
};

}  // namespace tsb
