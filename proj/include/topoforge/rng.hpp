#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>

namespace topoforge {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for one named stream, e.g. one sample of a dataset.
inline std::uint64_t seed_for(std::uint64_t root_seed, std::string_view name) {
    return splitmix64(root_seed ^ fnv1a64(name));
}

/// Deterministic random stream. The engine sequence is fixed by the standard and
/// every draw goes through hand-rolled mappings, so outputs are identical across
/// standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    Rng(std::uint64_t seed, std::string_view stream) : engine_(seed_for(seed, stream)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [lo, hi], both inclusive. Unbiased via rejection.
    int uniform_int(int lo, int hi) {
        if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
        const std::uint64_t span = std::uint64_t(std::int64_t(hi) - std::int64_t(lo)) + 1;
        std::uint64_t x, r;
        do {
            x = next_u64();
            r = x % span;
        } while (x - r > std::uint64_t(0) - span);
        return int(std::int64_t(lo) + std::int64_t(r));
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform_real() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform_real(); }

    bool coin() { return (next_u64() & 1u) != 0; }

    /// Index drawn proportionally to the given non-negative weights.
    std::size_t weighted_index(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("weighted_index: negative weight");
            total += w;
        }
        if (!(total > 0.0)) throw std::invalid_argument("weighted_index: zero total weight");
        const double u = uniform_real() * total;
        double cum = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            cum += weights[i];
            if (u < cum) return i;
        }
        return weights.size() - 1;
    }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        if (items.empty()) throw std::invalid_argument("pick: empty list");
        return items[std::size_t(uniform_int(0, int(items.size()) - 1))];
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace topoforge
