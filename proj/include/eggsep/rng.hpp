#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace eggsep {

// Seeded RNG with hand-rolled distributions so that streams are identical
// across platforms and standard-library versions. mt19937_64 itself is fully
// specified; std::*_distribution is not, so we do not use it.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller (no cached spare: two draws per call)
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // uniform integer in [0, n), Lemire multiply-shift
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    // derived independent stream
    Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ull); }

private:
    std::mt19937_64 engine_;
};

}  // namespace eggsep
