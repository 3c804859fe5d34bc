#pragma once

#include <cstdint>

namespace pbnlc {

/// Counter-based seed derivation (splitmix64 finalizer over seed and counter),
/// so that frames, spans and sweep points get independent, reproducible
/// streams regardless of evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace pbnlc
