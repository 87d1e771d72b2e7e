#pragma once

#include <complex>
#include <cstdint>
#include <string_view>

namespace rfadv {

// Deterministic 64-bit random stream (splitmix64). Hand-rolled so streams are
// bit-identical across platforms and standard-library versions; std::
// distributions are implementation-defined and would break byte-for-byte
// reproducibility of generated datasets.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Index in [0, n).
    uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller, pair-cached.
    double gaussian();

    // Circularly symmetric complex normal with E|z|^2 = 1.
    std::complex<double> circular_gaussian() {
        constexpr double inv_sqrt2 = 0.7071067811865475244;
        double re = gaussian();
        double im = gaussian();
        return {re * inv_sqrt2, im * inv_sqrt2};
    }

  private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derived stream seeds: one master seed fans out to independent streams via
// (tag, index) counters. Documented scheme: FNV-1a over the tag bytes, the
// master seed and the index, then one splitmix64 avalanche step.
uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index = 0);

} // namespace rfadv
