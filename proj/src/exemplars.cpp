#include "cil/exemplars.hpp"

#include <algorithm>
#include <numeric>

#include "cil/errors.hpp"
#include "cil/kernels.hpp"

namespace cil {

Tensor class_mean(const Tensor& features) {
    if (features.rank() != 2 || features.rows() == 0) throw ContractError("class_mean: need at least one row");
    const std::size_t n = features.rows(), d = features.cols();
    Tensor mu({d});
    kernels::column_sums(features.data(), mu.data(), n, d);
    for (auto& v : mu.storage()) v /= static_cast<double>(n);
    return mu;
}

std::vector<std::size_t> herding_select(const Tensor& features, std::size_t m) {
    const std::size_t n = features.rows();
    if (m == 0 || m > n)
        throw ContractError("herding_select: cannot pick " + std::to_string(m) + " of " + std::to_string(n) + " rows");
    const Tensor mu = class_mean(features);
    std::vector<double> dist(n);
    kernels::squared_distances(features.data(), mu.data(), dist, n, features.cols());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    order.resize(m);
    return order;
}

void ExemplarSet::set_class(std::size_t label, std::vector<std::size_t> ids) { per_class_[label] = std::move(ids); }

const std::vector<std::size_t>& ExemplarSet::of_class(std::size_t label) const {
    auto it = per_class_.find(label);
    if (it == per_class_.end()) throw ContractError("exemplars: no entry for class " + std::to_string(label));
    return it->second;
}

std::size_t ExemplarSet::size() const {
    std::size_t n = 0;
    for (const auto& [_, ids] : per_class_) n += ids.size();
    return n;
}

std::vector<std::size_t> ExemplarSet::instance_ids() const {
    std::vector<std::size_t> out;
    for (const auto& [_, ids] : per_class_) out.insert(out.end(), ids.begin(), ids.end());
    return out;
}

std::vector<std::size_t> ExemplarSet::labels() const {
    std::vector<std::size_t> out;
    for (const auto& [label, ids] : per_class_) out.insert(out.end(), ids.size(), label);
    return out;
}

std::size_t exemplar_quota(std::size_t budget, std::size_t seen_class_count) {
    if (seen_class_count == 0) throw ContractError("exemplar quota: no seen classes");
    const std::size_t m = budget / seen_class_count;
    if (m == 0)
        throw ContractError("exemplar budget " + std::to_string(budget) + " too small for " +
                            std::to_string(seen_class_count) + " classes");
    return m;
}

ExemplarSet rebalance(const ExemplarSet& set, std::size_t budget, std::size_t seen_class_count) {
    const std::size_t m = exemplar_quota(budget, seen_class_count);
    if (set.classes().size() > seen_class_count)
        throw ContractError("rebalance: set holds " + std::to_string(set.classes().size()) +
                            " classes but only " + std::to_string(seen_class_count) + " are seen");
    ExemplarSet out(budget);
    for (const auto& [label, ids] : set.classes()) {
        std::vector<std::size_t> kept(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(std::min(m, ids.size())));
        out.set_class(label, std::move(kept));
    }
    return out;
}

}  // namespace cil
