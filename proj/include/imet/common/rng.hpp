#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace imet {

/// Seedable deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are implementation-defined, so all
/// bounded draws are derived here from raw 64-bit outputs; a given seed
/// therefore yields the same samples on every conforming toolchain.
///
/// `derive(tag)` creates an independent child stream from the seed this
/// stream was constructed with and the tag. It does not depend on how many
/// values have already been drawn.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    RngStream derive(std::uint64_t tag) const { return RngStream(mix(seed_ ^ mix(tag + 0x632be59bd9b4e019ULL))); }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t uniform_index(std::uint64_t bound);

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    /// `count` distinct elements of `pool` in random order (partial Fisher-Yates).
    template <typename T>
    std::vector<T> sample_without_replacement(std::span<const T> pool, std::size_t count) {
        std::vector<T> scratch(pool.begin(), pool.end());
        const std::size_t n = scratch.size();
        for (std::size_t i = 0; i < count && i < n; ++i) {
            const auto j = i + static_cast<std::size_t>(uniform_index(n - i));
            std::swap(scratch[i], scratch[j]);
        }
        scratch.resize(count < n ? count : n);
        return scratch;
    }

    static std::uint64_t mix(std::uint64_t x) noexcept {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace imet
