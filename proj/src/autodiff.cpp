#include "cil/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cil/errors.hpp"
#include "cil/kernels.hpp"

namespace cil {

namespace {

void require_matrix(const Tensor& t, const char* op, const char* what) {
    if (t.rank() != 2)
        throw ContractError(std::string(op) + ": " + what + " must be rank 2, got " + shape_str(t.shape()));
}

}  // namespace

Tensor softmax_rows(const Tensor& logits) {
    Tensor out(logits.shape());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto in = logits.row(i);
        auto o = out.row(i);
        const double mx = *std::max_element(in.begin(), in.end());
        double z = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            o[j] = std::exp(in[j] - mx);
            z += o[j];
        }
        for (auto& v : o) v /= z;
    }
    return out;
}

std::vector<std::size_t> argmax_rows(const Tensor& logits) {
    std::vector<std::size_t> out(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto r = logits.row(i);
        out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

Var Graph::push(Tensor value, bool requires_grad, const char* op) {
    if (backward_done_) throw ContractError(std::string(op) + ": graph already consumed by backward(); reset() first");
    if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite value in output");
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad && mode_ == Mode::train;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Tensor& Graph::grad_of(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

Var Graph::constant(Tensor value) { return push(std::move(value), false, "constant"); }

Var Graph::param(Parameter& p) {
    Var v = push(p.value, !p.frozen, "param");
    if (nodes_[v.id].requires_grad) nodes_[v.id].param = &p;
    return v;
}

Var Graph::affine(Var x, Var w, Var b) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    const Tensor& bv = value(b);
    require_matrix(xv, "affine", "x");
    require_matrix(wv, "affine", "W");
    const std::size_t n = xv.rows(), k = xv.cols(), m = wv.cols();
    if (wv.rows() != k || bv.size() != m)
        throw ContractError("affine: shape mismatch x" + shape_str(xv.shape()) + " W" + shape_str(wv.shape()) +
                            " b" + shape_str(bv.shape()));
    Tensor y({n, m});
    kernels::gemm(xv.data(), wv.data(), bv.data(), y.data(), n, k, m);
    const bool rg = requires_grad(x) || requires_grad(w) || requires_grad(b);
    Var out = push(std::move(y), rg, "affine");
    if (rg) {
        nodes_[out.id].backprop = [x, w, b, n, k, m](Graph& g, std::size_t self) {
            const Tensor& gy = g.nodes_[self].grad;
            if (g.requires_grad(x)) {
                Tensor dx({n, k});
                kernels::gemm_nt(gy.data(), g.value(w).data(), dx.data(), n, m, k);
                Tensor& acc = g.grad_of(x.id);
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += dx[i];
            }
            if (g.requires_grad(w)) {
                Tensor dw({k, m});
                kernels::gemm_tn(g.value(x).data(), gy.data(), dw.data(), n, k, m);
                Tensor& acc = g.grad_of(w.id);
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += dw[i];
            }
            if (g.requires_grad(b)) {
                std::vector<double> db(m);
                kernels::column_sums(gy.data(), db, n, m);
                Tensor& acc = g.grad_of(b.id);
                for (std::size_t j = 0; j < m; ++j) acc[j] += db[j];
            }
        };
    }
    return out;
}

Var Graph::linear(Var x, Var w) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    require_matrix(xv, "linear", "x");
    require_matrix(wv, "linear", "W");
    const std::size_t n = xv.rows(), k = xv.cols(), m = wv.cols();
    if (wv.rows() != k)
        throw ContractError("linear: shape mismatch x" + shape_str(xv.shape()) + " W" + shape_str(wv.shape()));
    Tensor y({n, m});
    kernels::gemm(xv.data(), wv.data(), {}, y.data(), n, k, m);
    const bool rg = requires_grad(x) || requires_grad(w);
    Var out = push(std::move(y), rg, "linear");
    if (rg) {
        nodes_[out.id].backprop = [x, w, n, k, m](Graph& g, std::size_t self) {
            const Tensor& gy = g.nodes_[self].grad;
            if (g.requires_grad(x)) {
                Tensor dx({n, k});
                kernels::gemm_nt(gy.data(), g.value(w).data(), dx.data(), n, m, k);
                Tensor& acc = g.grad_of(x.id);
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += dx[i];
            }
            if (g.requires_grad(w)) {
                Tensor dw({k, m});
                kernels::gemm_tn(g.value(x).data(), gy.data(), dw.data(), n, k, m);
                Tensor& acc = g.grad_of(w.id);
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += dw[i];
            }
        };
    }
    return out;
}

Var Graph::relu(Var x) {
    Tensor y = value(x);
    for (auto& v : y.storage()) v = v > 0.0 ? v : 0.0;
    const bool rg = requires_grad(x);
    Var out = push(std::move(y), rg, "relu");
    if (rg) {
        nodes_[out.id].backprop = [x](Graph& g, std::size_t self) {
            const Tensor& gy = g.nodes_[self].grad;
            const Tensor& xv = g.value(x);
            Tensor& acc = g.grad_of(x.id);
            // subgradient at exactly 0 is 0
            for (std::size_t i = 0; i < acc.size(); ++i)
                if (xv[i] > 0.0) acc[i] += gy[i];
        };
    }
    return out;
}

Var Graph::concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ContractError("concat_cols: no inputs");
    const std::size_t n = value(parts[0]).rows();
    std::size_t total = 0;
    bool rg = false;
    for (Var p : parts) {
        require_matrix(value(p), "concat_cols", "input");
        if (value(p).rows() != n) throw ContractError("concat_cols: row count mismatch");
        total += value(p).cols();
        rg = rg || requires_grad(p);
    }
    Tensor y({n, total});
    std::size_t off = 0;
    for (Var p : parts) {
        const Tensor& pv = value(p);
        for (std::size_t i = 0; i < n; ++i) std::copy_n(pv.row(i).begin(), pv.cols(), y.row(i).begin() + off);
        off += pv.cols();
    }
    Var out = push(std::move(y), rg, "concat_cols");
    if (rg) {
        std::vector<Var> ins(parts.begin(), parts.end());
        nodes_[out.id].backprop = [ins, n](Graph& g, std::size_t self) {
            std::size_t off = 0;
            for (Var p : ins) {
                const std::size_t c = g.value(p).cols();
                if (g.requires_grad(p)) {
                    const Tensor& gy = g.nodes_[self].grad;
                    Tensor& acc = g.grad_of(p.id);
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < c; ++j) acc(i, j) += gy(i, off + j);
                }
                off += c;
            }
        };
    }
    return out;
}

Var Graph::add(Var a, Var b) {
    if (value(a).shape() != value(b).shape()) throw ContractError("add: shape mismatch");
    Tensor y = value(a);
    const Tensor& bv = value(b);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
    const bool rg = requires_grad(a) || requires_grad(b);
    Var out = push(std::move(y), rg, "add");
    if (rg) {
        nodes_[out.id].backprop = [a, b](Graph& g, std::size_t self) {
            for (Var in : {a, b}) {
                if (!g.requires_grad(in)) continue;
                const Tensor& gy = g.nodes_[self].grad;
                Tensor& acc = g.grad_of(in.id);
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += gy[i];
            }
        };
    }
    return out;
}

Var Graph::scale(Var a, double s) {
    Tensor y = value(a);
    for (auto& v : y.storage()) v *= s;
    const bool rg = requires_grad(a);
    Var out = push(std::move(y), rg, "scale");
    if (rg) {
        nodes_[out.id].backprop = [a, s](Graph& g, std::size_t self) {
            const Tensor& gy = g.nodes_[self].grad;
            Tensor& acc = g.grad_of(a.id);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * gy[i];
        };
    }
    return out;
}

Var Graph::sum(Var a) {
    double s = 0.0;
    for (double v : value(a).data()) s += v;
    const bool rg = requires_grad(a);
    Var out = push(Tensor::scalar(s), rg, "sum");
    if (rg) {
        nodes_[out.id].backprop = [a](Graph& g, std::size_t self) {
            const double gy = g.nodes_[self].grad[0];
            Tensor& acc = g.grad_of(a.id);
            for (auto& v : acc.storage()) v += gy;
        };
    }
    return out;
}

Var Graph::softmax_cross_entropy(Var logits, std::span<const std::size_t> labels) {
    const Tensor& z = value(logits);
    require_matrix(z, "softmax_cross_entropy", "logits");
    const std::size_t n = z.rows(), c = z.cols();
    if (labels.size() != n)
        throw ContractError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(n) + " rows");
    for (auto y : labels)
        if (y >= c)
            throw ContractError("softmax_cross_entropy: label " + std::to_string(y) + " out of range [0, " +
                                std::to_string(c) + ")");
    Tensor probs = softmax_rows(z);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = z.row(i);
        const double mx = *std::max_element(r.begin(), r.end());
        double lse = 0.0;
        for (double v : r) lse += std::exp(v - mx);
        loss += -(r[labels[i]] - mx - std::log(lse));
    }
    loss /= static_cast<double>(n);
    const bool rg = requires_grad(logits);
    Var out = push(Tensor::scalar(loss), rg, "softmax_cross_entropy");
    if (rg) {
        std::vector<std::size_t> ys(labels.begin(), labels.end());
        nodes_[out.id].backprop = [logits, ys, probs = std::move(probs), n, c](Graph& g, std::size_t self) {
            const double gy = g.nodes_[self].grad[0] / static_cast<double>(n);
            Tensor& acc = g.grad_of(logits.id);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    acc(i, j) += gy * (probs(i, j) - (j == ys[i] ? 1.0 : 0.0));
        };
    }
    return out;
}

Var Graph::kd_term(Var new_logits, const Tensor& old_logits) {
    const Tensor& z = value(new_logits);
    require_matrix(z, "kd_term", "new_logits");
    require_matrix(old_logits, "kd_term", "old_logits");
    const std::size_t n = z.rows();
    const std::size_t c_old = old_logits.cols();
    if (c_old == 0) throw ContractError("kd_term: no old classes (first task has no previous model)");
    if (old_logits.rows() != n) throw ContractError("kd_term: row count mismatch");
    if (c_old > z.cols())
        throw ContractError("kd_term: old model has " + std::to_string(c_old) + " classes but new logits only " +
                            std::to_string(z.cols()));
    const Tensor target = softmax_rows(old_logits);
    Tensor restricted({n, c_old});
    for (std::size_t i = 0; i < n; ++i) std::copy_n(z.row(i).begin(), c_old, restricted.row(i).begin());
    Tensor q = softmax_rows(restricted);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = restricted.row(i);
        const double mx = *std::max_element(r.begin(), r.end());
        double lse = 0.0;
        for (double v : r) lse += std::exp(v - mx);
        const double log_z = mx + std::log(lse);
        for (std::size_t k = 0; k < c_old; ++k) loss -= target(i, k) * (r[k] - log_z);
    }
    loss /= static_cast<double>(n);
    const bool rg = requires_grad(new_logits);
    Var out = push(Tensor::scalar(loss), rg, "kd_term");
    if (rg) {
        nodes_[out.id].backprop = [new_logits, target, q = std::move(q), n, c_old](Graph& g, std::size_t self) {
            const double gy = g.nodes_[self].grad[0] / static_cast<double>(n);
            Tensor& acc = g.grad_of(new_logits.id);
            for (std::size_t i = 0; i < n; ++i) {
                double mass = 0.0;
                for (std::size_t k = 0; k < c_old; ++k) mass += target(i, k);
                for (std::size_t k = 0; k < c_old; ++k) acc(i, k) += gy * (q(i, k) * mass - target(i, k));
            }
        };
    }
    return out;
}

void Graph::backward(Var loss) {
    if (backward_done_) throw ContractError("backward: already called on this graph; reset() first");
    Node& root = nodes_.at(loss.id);
    if (root.value.size() != 1) throw ContractError("backward: loss must be a scalar, got " + shape_str(root.value.shape()));
    if (!std::isfinite(root.value[0])) throw NumericError("backward: non-finite loss");
    backward_done_ = true;
    if (!root.requires_grad) return;
    grad_of(loss.id)[0] = 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.empty()) continue;
        if (n.backprop) n.backprop(*this, id);
        if (n.param != nullptr) {
            if (!n.grad.all_finite()) throw NumericError("backward: non-finite gradient for parameter " + n.param->name);
            if (n.param->grad.shape() != n.param->value.shape()) n.param->grad = Tensor(n.param->value.shape());
            for (std::size_t i = 0; i < n.grad.size(); ++i) n.param->grad[i] += n.grad[i];
        }
    }
}

void Graph::reset() {
    nodes_.clear();
    backward_done_ = false;
}

}  // namespace cil
