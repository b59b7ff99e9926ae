#pragma once

#include <cstdint>
#include <random>

namespace delaycert::detail {

// Uniform double in [0, 1) from the top 53 bits of the engine output.
// std::uniform_real_distribution is implementation-defined, which would break
// the seeded-reproducibility guarantees, so the mapping is spelled out.
inline double unit_double(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Uniform double in [-m, m].
inline double symmetric_double(std::mt19937_64& gen, double m) {
    return m * (2.0 * unit_double(gen) - 1.0);
}

}  // namespace delaycert::detail
