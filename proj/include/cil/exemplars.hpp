#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "cil/tensor.hpp"

namespace cil {

/// Mean feature vector of one class.
Tensor class_mean(const Tensor& features);

/// Indices of the m rows closest (Euclidean) to the class mean, nearest
/// first; equal distances keep ascending row order. The ranking is computed
/// once, so the selection for m is a prefix of the selection for m + 1.
std::vector<std::size_t> herding_select(const Tensor& features, std::size_t m);

/// Stored exemplars: per class, instance ids in herding order.
class ExemplarSet {
 public:
    ExemplarSet() = default;
    explicit ExemplarSet(std::size_t budget) : budget_(budget) {}

    std::size_t budget() const noexcept { return budget_; }
    void set_budget(std::size_t k) noexcept { budget_ = k; }

    void set_class(std::size_t label, std::vector<std::size_t> ids);
    const std::vector<std::size_t>& of_class(std::size_t label) const;
    bool has_class(std::size_t label) const { return per_class_.contains(label); }
    const std::map<std::size_t, std::vector<std::size_t>>& classes() const noexcept { return per_class_; }

    std::size_t size() const;
    bool empty() const { return size() == 0; }

    // Flattened (instance id, label) pairs in class order.
    std::vector<std::size_t> instance_ids() const;
    std::vector<std::size_t> labels() const;

    bool operator==(const ExemplarSet&) const = default;

 private:
    std::size_t budget_ = 0;
    std::map<std::size_t, std::vector<std::size_t>> per_class_;
};

/// Per-class quota floor(K / seen_class_count).
std::size_t exemplar_quota(std::size_t budget, std::size_t seen_class_count);

/// Truncates every class list to the quota for K and seen_class_count.
ExemplarSet rebalance(const ExemplarSet& set, std::size_t budget, std::size_t seen_class_count);

}  // namespace cil
