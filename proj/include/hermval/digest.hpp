#pragma once

#include <cstdint>
#include <cstring>

namespace hermval {

// FNV-1a over raw bytes; used to derive deterministic per-input substreams.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a_doubles(const double* data, std::size_t count,
                                   std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(data, count * sizeof(double), h);
}

}  // namespace hermval
