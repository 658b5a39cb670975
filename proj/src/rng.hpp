#pragma once

#include <cmath>
#include <numbers>
#include <random>

namespace lovewave::detail {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
// unlike the standard distributions.
inline double unit_uniform(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double standard_normal(std::mt19937_64& gen) {
    const double u1 = 1.0 - unit_uniform(gen);  // (0, 1]
    const double u2 = unit_uniform(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace lovewave::detail
