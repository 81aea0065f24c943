#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace afgrl {

// Seeded generator with a platform-independent integer stream (mt19937_64 is
// fully specified by the standard). Floating-point draws are derived here
// rather than through std:: distributions, whose sequences vary between
// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return state_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard gaussian via Box-Muller; the pair's second value is cached.
    double normal();

    // Unbiased integer in [0, n); n must be positive.
    std::size_t uniform_index(std::size_t n);

    // Fisher-Yates; std::shuffle is not used because its draw sequence is
    // implementation-defined.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Derives an independent sub-stream seed from a base seed and a tag, so all
// randomness in a run can flow from one --seed value.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

}  // namespace afgrl
