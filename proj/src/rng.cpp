#include "vda/rng.hpp"

#include <cmath>

#include "vda/errors.hpp"

namespace vda {

namespace {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed) {
    uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
}

uint64_t Rng::next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::below(uint64_t n) {
    if (n == 0) throw ArgumentError("Rng::below: n must be positive");
    // Rejection sampling to avoid modulo bias.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double Rng::gaussian(double sigma) {
    if (sigma < 0) throw ArgumentError("Rng::gaussian: sigma must be non-negative");
    if (sigma == 0) return 0.0;
    double u1 = uniform();
    double u2 = uniform();
    // u1 in (0,1] so log is finite.
    u1 = 1.0 - u1;
    return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<double> Rng::gaussian_vector(std::size_t n, double sigma) {
    if (sigma < 0) throw ArgumentError("gaussian_vector: sigma must be non-negative");
    std::vector<double> out(n);
    for (auto& v : out) v = gaussian(sigma);
    return out;
}

Rng Rng::fork(uint64_t salt) const {
    uint64_t x = seed_ ^ (0xA0761D6478BD642FULL * (salt + 1));
    return Rng(splitmix64(x));
}

}  // namespace vda
