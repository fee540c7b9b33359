#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace law {

// SplitMix64 mixing step; used to derive independent stream seeds from a base
// seed plus structured tags (worker index, round, purpose).
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t a = 0, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = splitmix64(base);
    s = splitmix64(s ^ (a + 0x100000001b3ULL));
    s = splitmix64(s ^ (b + 0xcbf29ce484222325ULL));
    s = splitmix64(s ^ (c + 0x27d4eb2f165667c5ULL));
    return s;
}

// Deterministic RNG wrapper. The mt19937_64 engine output is pinned by the
// standard; all value transforms live here instead of std distributions,
// whose algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    int next_int(int n) {
        int v = static_cast<int>(uniform() * static_cast<double>(n));
        return v >= n ? n - 1 : v;
    }

    // Box-Muller without the cached second variate, so the draw count per
    // call is fixed and the stream stays easy to reason about.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_int(static_cast<int>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace law
