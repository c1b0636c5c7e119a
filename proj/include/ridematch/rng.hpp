#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ridematch {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the named substream `stream`/`index` under `seed`. Streams with
/// different names or indices are independent, so adding one never shifts
/// another.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(seed ^ h) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Engine make_stream(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  return Engine(derive_seed(seed, stream, index));
}

}  // namespace ridematch
