#pragma once

#include <cstdint>
#include <vector>

namespace vda {

// Seeded xoshiro256** generator with splitmix64 state expansion.
// The algorithm is fixed so that a given seed yields the same stream on
// every platform; std::normal_distribution is avoided for the same reason.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();

    // Uniform in [0, 1), 53-bit mantissa.
    double uniform();

    // Uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n);

    // One draw from N(0, sigma^2) via Box-Muller (two uniforms consumed per
    // draw, no caching, so the stream position is call-count deterministic).
    // sigma == 0 returns exactly 0. Negative sigma is an argument error.
    double gaussian(double sigma);

    std::vector<double> gaussian_vector(std::size_t n, double sigma);

    // Derive an independent stream from this generator's seed and a salt.
    // Forking does not advance this generator.
    Rng fork(uint64_t salt) const;

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_[4];
    uint64_t seed_;
};

}  // namespace vda
