#pragma once

#include <cstdint>
#include <random>

namespace seqchain {

// Reproducibility contract: every stochastic routine takes a 64-bit
// master seed; trial i runs on a generator seeded with
// trial_seed(master, i), a pure function, so results do not depend on
// execution order. The generator is std::mt19937_64 and is named in
// every report header.

inline constexpr const char* kGeneratorName = "mt19937_64";

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial_index) {
    return splitmix64(master + 0x9E3779B97F4A7C15ULL * (trial_index + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform draw in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Inverse-CDF draw over row[0..n), scanned in index order. The
    /// final index absorbs any rounding remainder.
    int categorical(const double* row, int n) {
        double u = uniform();
        double acc = 0.0;
        for (int i = 0; i < n - 1; ++i) {
            acc += row[i];
            if (u < acc) return i;
        }
        return n - 1;
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace seqchain
