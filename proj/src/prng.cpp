#include "cil/prng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <utility>

#include "cil/errors.hpp"

namespace cil {

double Prng::normal() noexcept {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Prng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i-- > 1;) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

std::vector<std::size_t> shuffle_class_order(std::size_t num_classes, std::uint64_t seed) {
    if (num_classes == 0) throw ContractError("shuffle_class_order: need at least one class");
    Prng rng(seed);
    return shuffled_indices(num_classes, rng);
}

}  // namespace cil
