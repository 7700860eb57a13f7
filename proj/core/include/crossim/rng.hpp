#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace crossim {

/// Deterministic 64-bit generator (splitmix64). Identical streams on every
/// platform for a given seed, unlike the distributions in <random>.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0)
            return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit)
            x = next_u64();
        return x % n;
    }

    /// Standard normal via Box-Muller; the spare value is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double mean, double sd) { return mean + sd * gaussian(); }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Seed derivation for independent reproducible streams. FNV-1a over the
/// mixed-in parts, finalized through the splitmix64 mixer. The hash starts
/// from the FNV offset basis; the base seed enters only through its bytes,
/// so nearby bases never cancel against the initial state.
class SeedDeriver {
public:
    explicit SeedDeriver(std::uint64_t base = 0) : hash_(0xcbf29ce484222325ULL) {
        mix_u64(base);
    }

    SeedDeriver& mix(std::string_view label) {
        for (const char c : label)
            step(static_cast<std::uint8_t>(c));
        step(0xff);  // delimiter so ("ab","c") != ("a","bc")
        return *this;
    }

    SeedDeriver& mix(std::uint64_t v) {
        mix_u64(v);
        return *this;
    }

    std::uint64_t finish() const {
        std::uint64_t z = hash_ + 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    void step(std::uint8_t byte) {
        hash_ ^= byte;
        hash_ *= 0x100000001b3ULL;
    }

    void mix_u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i)
            step(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::uint64_t hash_;
};

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    return SeedDeriver(base).mix(label).finish();
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t a) {
    return SeedDeriver(base).mix(label).mix(a).finish();
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::string_view sub,
                                 std::uint64_t a) {
    return SeedDeriver(base).mix(label).mix(sub).mix(a).finish();
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::string_view sub) {
    return SeedDeriver(base).mix(label).mix(sub).finish();
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::string_view sub,
                                 std::string_view sub2) {
    return SeedDeriver(base).mix(label).mix(sub).mix(sub2).finish();
}

}  // namespace crossim
