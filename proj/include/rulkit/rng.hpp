#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace rulkit {

// splitmix64 finalizer; used to derive independent per-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seeded RNG with hand-rolled distributions. std::mt19937_64 output is
/// pinned by the standard, but the <random> distributions are not; rolling
/// our own keeps streams bit-identical across platforms and compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // (0, 1]
    double uniform_open_left() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; two engine draws per call.
    double normal() {
        const double u1 = uniform_open_left();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Unbiased integer in [0, n) via masked rejection.
    std::uint64_t bounded(std::uint64_t n) {
        if (n <= 1) {
            return 0;
        }
        std::uint64_t mask = n - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        for (;;) {
            const std::uint64_t v = engine_() & mask;
            if (v < n) {
                return v;
            }
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        if (values.size() < 2) {
            return;
        }
        for (std::size_t i = values.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i + 1));
            std::swap(values[i], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace rulkit
