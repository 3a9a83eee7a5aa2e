#pragma once

#include <vector>

#include "cil/autodiff.hpp"

namespace cil {

// From `epoch` on, the learning rate is further multiplied by `factor`.
struct LrMilestone {
    int epoch = 0;
    double factor = 1.0;
    bool operator==(const LrMilestone&) const = default;
};

struct SgdConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    std::vector<LrMilestone> schedule;
};

/// SGD with heavy-ball momentum: v <- mu * v + g; w <- w - lr * v.
/// Velocities start at zero; one instance is created per training stage.
class Sgd {
 public:
    Sgd(SgdConfig config, std::vector<Parameter*> params);

    double learning_rate(int epoch) const;
    void step(int epoch);
    void zero_grad();

    const std::vector<Tensor>& velocity() const noexcept { return velocity_; }

 private:
    SgdConfig config_;
    std::vector<Parameter*> params_;
    std::vector<Tensor> velocity_;
};

}  // namespace cil
