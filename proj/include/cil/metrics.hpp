#pragma once

#include <span>
#include <vector>

namespace cil {

/// Percentages are reported to two decimals, half rounded up.
double round2(double value);

double average_accuracy(std::span<const double> stage_accuracies);

struct CurvePoint {
    double memory_mb = 0.0;
    double avg_acc = 0.0;   // percent
    double last_acc = 0.0;  // percent
    bool operator==(const CurvePoint&) const = default;
};

/// Performance-memory curve; points strictly increasing in memory.
class PMCurve {
 public:
    PMCurve() = default;
    explicit PMCurve(std::vector<CurvePoint> points);

    const std::vector<CurvePoint>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }

 private:
    std::vector<CurvePoint> points_;
};

enum class CurveSeries { average, last };

/// Trapezoidal area of accuracy-as-fraction over memory in MB.
double auc(const PMCurve& curve, CurveSeries which);

/// Accuracy (percent) per MB.
double apm(double acc_pct, double memory_mb);

/// acc[s][t] is the accuracy on task t after stage s (t <= s). Returns, per
/// task, its accuracy when first learned minus its accuracy after the last
/// stage.
std::vector<double> forgetting_profile(const std::vector<std::vector<double>>& acc);

}  // namespace cil
