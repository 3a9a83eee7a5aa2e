#include "cil/optim.hpp"

#include <cmath>

#include "cil/errors.hpp"

namespace cil {

Sgd::Sgd(SgdConfig config, std::vector<Parameter*> params) : config_(std::move(config)), params_(std::move(params)) {
    if (!(config_.learning_rate > 0.0)) throw ContractError("sgd: learning rate must be positive");
    if (config_.momentum < 0.0 || config_.momentum >= 1.0) throw ContractError("sgd: momentum must lie in [0, 1)");
    for (const auto& m : config_.schedule)
        if (!(m.factor > 0.0)) throw ContractError("sgd: schedule factors must be positive");
    velocity_.reserve(params_.size());
    for (const Parameter* p : params_) velocity_.emplace_back(p->value.shape());
}

double Sgd::learning_rate(int epoch) const {
    double lr = config_.learning_rate;
    for (const auto& m : config_.schedule)
        if (epoch >= m.epoch) lr *= m.factor;
    if (!(lr > 0.0)) throw ContractError("sgd: scheduled learning rate underflowed to zero");
    return lr;
}

void Sgd::step(int epoch) {
    const double lr = learning_rate(epoch);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        if (p.frozen) continue;
        if (p.grad.shape() != p.value.shape()) throw ContractError("sgd: gradient shape mismatch for " + p.name);
        if (!p.grad.all_finite()) throw NumericError("sgd: non-finite gradient for parameter " + p.name);
        Tensor& v = velocity_[i];
        for (std::size_t j = 0; j < v.size(); ++j) {
            v[j] = config_.momentum * v[j] + p.grad[j];
            p.value[j] -= lr * v[j];
        }
    }
}

void Sgd::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

}  // namespace cil
