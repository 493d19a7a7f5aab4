#pragma once

#include <cstdint>
#include <random>

namespace erma {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
// Independent sub-stream seed for (master, index, stream).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream = 0);

inline Rng make_rng(std::uint64_t master, std::uint64_t index = 0, std::uint64_t stream = 0) {
    return Rng(derive_seed(master, index, stream));
}

}  // namespace erma
