#pragma once
// Seedable RNG with a pinned bounded-draw algorithm so sampled sequences do
// not depend on the standard library's distribution implementations.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace kgqa {

class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    // Uniform draw in [0, n) by rejection sampling.
    uint64_t bounded(uint64_t n) {
        if (n == 0) throw std::invalid_argument("bounded(0)");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    size_t index(size_t n) { return static_cast<size_t>(bounded(n)); }

    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Draw an index according to non-negative weights (need not be normalized).
    size_t weighted(const std::vector<double>& weights) {
        double total = 0;
        for (double w : weights) {
            if (w < 0) throw std::invalid_argument("negative weight");
            total += w;
        }
        if (total <= 0) throw std::invalid_argument("weights sum to zero");
        double x = uniform01() * total;
        for (size_t i = 0; i < weights.size(); ++i) {
            x -= weights[i];
            if (x < 0) return i;
        }
        return weights.size() - 1;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace kgqa
