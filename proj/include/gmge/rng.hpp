#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace gmge {

// Deterministic RNG used for parameter init, shuffles and phantom
// synthesis. splitmix64 keeps results identical across platforms and
// standard-library versions, which the reproducibility guarantees
// (identical seed -> identical bytes) depend on.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller (one value per call; no cache so
    // the stream stays a pure function of the call count).
    double next_normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derive an independent stream, e.g. one per patient or per fold.
    static uint64_t derive(uint64_t seed, uint64_t stream) {
        Rng r(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
        return r.next_u64();
    }

private:
    uint64_t state_;
};

inline double Rng::next_normal() {
    // Box-Muller; u1 in (0,1] to keep log finite.
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    constexpr double two_pi = 6.283185307179586476925286766559;
    double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(two_pi * u2);
}

}  // namespace gmge
