#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace c2f {

// Deterministic RNG. std::mt19937_64 has a standard-mandated sequence, but the
// std distributions do not, so the mappings to floats/ranges live here.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double next_f64() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [lo, hi] inclusive.
    int64_t next_int(int64_t lo, int64_t hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int64_t>(engine_() % span);
    }

    // Uniform in [lo, hi).
    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_f64();
    }

    bool next_bool() { return (engine_() & 1u) != 0; }

    // Fisher-Yates, deterministic for a given engine state.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_int(0, static_cast<int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// Stateless seed mixer for deriving independent streams (per example, per
// epoch) so results do not depend on scheduling order.
inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c = 0) {
    uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1) + 0xbf58476d1ce4e5b9ULL * (c + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace c2f
