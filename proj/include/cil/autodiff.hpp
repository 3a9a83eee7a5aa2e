#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cil/tensor.hpp"

namespace cil {

/// A learnable tensor with its gradient slot. Frozen parameters act as
/// constants in every graph and are never touched by the optimizer.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool frozen = false;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad.fill(0.0); }
    bool operator==(const Parameter&) const = default;
};

/// Handle to a node of a Graph.
struct Var {
    std::size_t id = 0;
};

/// Tape-based reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so walking the tape backwards is a
/// valid topological order. A graph is single-use: backward() may run once,
/// after which reset() must be called before recording again.
class Graph {
 public:
    enum class Mode { train, inference };

    explicit Graph(Mode mode = Mode::train) : mode_(mode) {}

    Var constant(Tensor value);
    Var param(Parameter& p);

    Var affine(Var x, Var w, Var b);
    Var linear(Var x, Var w);
    Var relu(Var x);
    Var concat_cols(std::span<const Var> parts);
    Var add(Var a, Var b);
    Var scale(Var a, double s);
    Var sum(Var a);

    // Mean over rows of -log softmax(logits)[label], max-shifted.
    Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels);

    // Mean over rows of -sum_k softmax(old)_k * log softmax(new[:, :C_old])_k.
    // old_logits is a constant produced by the frozen previous-stage model.
    Var kd_term(Var new_logits, const Tensor& old_logits);

    const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    // Accumulates d(loss)/d(param) into every reachable, non-frozen Parameter.
    void backward(Var loss);
    void reset();

 private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        Parameter* param = nullptr;
        std::function<void(Graph&, std::size_t)> backprop;
    };

    Var push(Tensor value, bool requires_grad, const char* op);
    Tensor& grad_of(std::size_t id);

    Mode mode_;
    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

/// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& logits);

/// Index of the largest entry per row (lowest index on ties).
std::vector<std::size_t> argmax_rows(const Tensor& logits);

}  // namespace cil
