#pragma once

// Seed derivation. Every random quantity in the library is drawn from an
// engine seeded by derive_seed(parent, stream), so results depend only on the
// top-level seed and the stream path, never on scheduling.

#include <cstdint>
#include <random>

namespace asub {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) {
  return splitmix64(splitmix64(parent) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Named substreams used by the experiment drivers.
enum class Stream : std::uint64_t {
  kSamples = 1,
  kHeldOut = 2,
  kBootstrap = 3,
  kSpanBasis = 4,
  kInitialDesign = 5,
  kAcquisition = 6,
  kGradCheck = 7,
  kKnn = 8,
  kWarp = 9,
};

constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream s) {
  return derive_seed(parent, static_cast<std::uint64_t>(s));
}

using Engine = std::mt19937_64;

}  // namespace asub
