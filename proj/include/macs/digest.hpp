#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace macs {

// 64-bit FNV-1a over the raw bytes of a sequence string. The algorithm is
// fixed so that digests (and caches keyed by them) are portable across runs
// and machines.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string digest_hex(std::string_view bytes) {
  static constexpr char hex[] = "0123456789abcdef";
  std::uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace macs
