#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <vector>

namespace gkin {

using Rng = std::mt19937_64;

/// Independent stream keyed by (master seed, counters...).
///
/// Every worker, step and purpose gets its own key, so a run can be resumed
/// from (seed, step) alone and a worker's draws never depend on scheduling.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * counters.size());
    auto push = [&](std::uint64_t x) {
        words.push_back(static_cast<std::uint32_t>(x & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(x >> 32));
    };
    push(seed);
    for (auto c : counters) push(c);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

/// Uniform on [0, 1).
inline double uniform01(Rng& rng) {
    return std::generate_canonical<double, 53>(rng);
}

/// Uniform on (0, 1]; safe for logarithms and negative powers.
inline double uniform_open0(Rng& rng) {
    return 1.0 - uniform01(rng);
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

}  // namespace gkin
