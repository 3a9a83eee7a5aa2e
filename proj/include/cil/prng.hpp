#pragma once

#include <cstdint>
#include <vector>

namespace cil {

/// splitmix64. Every random draw in the framework (initialization, shuffles,
/// synthetic data) comes from one of these, so runs are reproducible on any
/// platform given the seed.
class Prng {
 public:
    explicit Prng(std::uint64_t seed = 0) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; the sine branch is discarded so each
    // call consumes exactly two outputs.
    double normal() noexcept;

    // value mod n, as used by the Fisher-Yates shuffle.
    std::uint64_t below(std::uint64_t n) noexcept { return next() % n; }

    std::uint64_t state() const noexcept { return state_; }

 private:
    std::uint64_t state_;
};

/// Fisher-Yates over 0..n-1: for i = n-1 down to 1, j = next() mod (i+1).
std::vector<std::size_t> shuffled_indices(std::size_t n, Prng& rng);

/// Permutation of 0..C-1 seeded independently of any other stream.
std::vector<std::size_t> shuffle_class_order(std::size_t num_classes, std::uint64_t seed);

}  // namespace cil
