#pragma once

#include <cstdint>
#include <random>

#include "stochlang/errors.hpp"

namespace stochlang {

// Reproducible random source. mt19937_64 output is fixed by the standard and
// every derived draw below is computed explicitly, so a seed determines the
// exact sample sequence on any platform.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Shifted geometric: P(k) = alpha * (1-alpha)^(k-1) for k >= 1.
    std::uint64_t shifted_geometric(double alpha) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw WeightError("geometric parameter must lie in (0,1)");
        std::uint64_t k = 1;
        while (!bernoulli(alpha)) ++k;
        return k;
    }

    // Uniform index in [0, n).
    std::size_t uniform_index(std::size_t n) {
        std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace stochlang
