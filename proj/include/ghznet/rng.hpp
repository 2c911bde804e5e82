#pragma once

#include <cstdint>
#include <random>

namespace ghznet {

/// SplitMix64 finalizer. Used to turn (master seed, trial, stream) triples
/// into well-separated engine seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::uint64_t stream = 0) noexcept
{
    return mix64(mix64(mix64(master) ^ index) + stream);
}

/// Thin wrapper over std::mt19937_64 with the handful of draws the
/// simulator needs. All draws are platform-independent given the seed.
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    void seed(std::uint64_t s) { engine_.seed(s); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, bound). Unbiased via rejection.
    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t limit = engine_type::max() - engine_type::max() % bound;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % bound;
    }

    std::uint64_t bits() { return engine_(); }

    engine_type& engine() { return engine_; }

private:
    engine_type engine_;
};

/// Fisher-Yates partial shuffle: after the call the first `k` entries of
/// `items` are a uniformly random k-subset in random order.
template <typename Container>
void partial_shuffle(Container& items, std::size_t k, Rng& rng)
{
    const std::size_t n = items.size();
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        using std::swap;
        swap(items[i], items[j]);
    }
}

} // namespace ghznet
