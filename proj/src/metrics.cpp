#include "cil/metrics.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cil/errors.hpp"

namespace cil {

double round2(double value) {
    // The epsilon absorbs representation error of inputs like 69.975 that are
    // exact halves in decimal.
    return std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0;
}

double average_accuracy(std::span<const double> stage_accuracies) {
    if (stage_accuracies.empty()) throw ContractError("average_accuracy: no stages");
    const double sum = std::accumulate(stage_accuracies.begin(), stage_accuracies.end(), 0.0);
    return round2(sum / static_cast<double>(stage_accuracies.size()));
}

PMCurve::PMCurve(std::vector<CurvePoint> points) : points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (p.avg_acc < 0.0 || p.avg_acc > 100.0 || p.last_acc < 0.0 || p.last_acc > 100.0)
            throw ContractError("curve: accuracy outside [0, 100]");
        if (i > 0 && !(p.memory_mb > points_[i - 1].memory_mb))
            throw ContractError("curve: memory values must be strictly increasing");
    }
}

double auc(const PMCurve& curve, CurveSeries which) {
    const auto& pts = curve.points();
    if (pts.size() < 2) throw ContractError("auc: need at least 2 points, got " + std::to_string(pts.size()));
    auto acc = [which](const CurvePoint& p) { return (which == CurveSeries::average ? p.avg_acc : p.last_acc) / 100.0; };
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        area += 0.5 * (acc(pts[i - 1]) + acc(pts[i])) * (pts[i].memory_mb - pts[i - 1].memory_mb);
    return area;
}

double apm(double acc_pct, double memory_mb) {
    if (!(memory_mb > 0.0)) throw ContractError("apm: memory must be positive");
    return acc_pct / memory_mb;
}

std::vector<double> forgetting_profile(const std::vector<std::vector<double>>& acc) {
    if (acc.empty()) throw ContractError("forgetting_profile: empty accuracy matrix");
    const std::size_t stages = acc.size();
    for (std::size_t s = 0; s < stages; ++s)
        if (acc[s].size() < s + 1)
            throw ContractError("forgetting_profile: stage " + std::to_string(s) + " is missing task accuracies");
    std::vector<double> drops(stages);
    for (std::size_t t = 0; t < stages; ++t) drops[t] = acc[t][t] - acc[stages - 1][t];
    return drops;
}

}  // namespace cil
