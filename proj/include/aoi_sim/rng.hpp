#pragma once

#include <cstdint>
#include <cmath>

namespace aoisim {

// splitmix64, used for seed derivation so that substreams decorrelate even
// for adjacent master seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d4a9cbf5a7e1d5ULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
    std::uint64_t s = master ^ (0x6a09e667f3bcc909ULL + stream_id * 0x9e3779b97f4a7c15ULL);
    splitmix64(s);
    return splitmix64(s);
}

// xoshiro256** — self-contained so sample paths are bit-identical across
// platforms and standard libraries (std::distributions are not portable).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0xdeadbeefULL) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Exponential with the given mean (inverse CDF on the open interval).
    double exponential(double mean) {
        double u;
        do { u = uniform01(); } while (u <= 0.0);
        return -mean * std::log(u);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Gaussian via Box-Muller; one value per call, no cached spare, so the
    // stream position is a pure function of call count.
    double gaussian(double mean = 0.0, double stddev = 1.0) {
        double u1;
        do { u1 = uniform01(); } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
        return mean + stddev * z;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

}  // namespace aoisim
