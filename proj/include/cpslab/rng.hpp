#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cpslab {

// splitmix64 finalizer. Used both as the seed-derivation mixer and to
// expand a single 64-bit seed into engine state.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Injective-in-practice derivation of a per-path seed from (base_seed, index).
// Documented contract: ensembles are reproducible across machines because
// both this mixer and mt19937_64 are fully specified.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t path_index) {
    return mix64(base_seed ^ mix64(path_index + 0x632be59bd9b4e019ULL));
}

// Deterministic standard-normal source. std::normal_distribution is
// implementation-defined, so we ship our own polar Box-Muller on top of
// the standardized mt19937_64 bit stream.
class NormalRng {
public:
    explicit NormalRng(std::uint64_t seed) : engine_(mix64(seed)) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

    double uniform01() {
        // 53-bit mantissa uniform in [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace cpslab
