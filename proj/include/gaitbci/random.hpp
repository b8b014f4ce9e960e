#pragma once

#include <cstdint>
#include <random>

namespace gaitbci {

// splitmix64 finalizer; used to derive independent stream seeds from a
// master seed so results never depend on evaluation order.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t salt = 0) {
  return mix_seed(mix_seed(master ^ mix_seed(salt)) + stream);
}

using Rng = std::mt19937_64;

// Uniform on [0, 1) with 53 random bits; portable across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace gaitbci
