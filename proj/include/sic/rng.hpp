#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sic {

using Rng = std::mt19937_64;

/// Deterministic sub-seed for a named purpose: FNV-1a over the purpose string,
/// folded with the master seed and an index through splitmix64.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, std::string_view purpose, std::uint64_t index = 0) {
  return Rng(derive_seed(master, purpose, index));
}

}  // namespace sic
