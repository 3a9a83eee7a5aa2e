#include "cil/probes.hpp"

#include <cmath>

#include "cil/errors.hpp"
#include "cil/kernels.hpp"

namespace cil {

std::vector<double> block_grad_norms(std::span<Block* const> blocks) {
    std::vector<double> norms;
    norms.reserve(blocks.size());
    for (const Block* b : blocks) {
        if (b->frozen()) {
            norms.push_back(0.0);
            continue;
        }
        double sq = 0.0;
        for (const Parameter* p : {&b->weight, &b->bias})
            for (double g : p->grad.data()) sq += g * g;
        norms.push_back(std::sqrt(sq));
    }
    return norms;
}

std::vector<double> grad_norm_per_block(ExpandableModel& model, const Tensor& batch, const LossFn& loss) {
    for (Parameter* p : model.parameters()) p->zero_grad();
    Graph g;
    auto fwd = model.forward(g, batch);
    Var l = loss(g, model, fwd);
    if (!std::isfinite(g.value(l)[0])) throw NumericError("grad_norm_per_block: non-finite loss");
    g.backward(l);
    auto blocks = model.active_blocks();
    return block_grad_norms(blocks);
}

BlockSnapshot snapshot_blocks(std::span<Block* const> blocks) {
    BlockSnapshot snap;
    snap.reserve(blocks.size());
    for (const Block* b : blocks) {
        std::vector<double> flat(b->weight.value.storage());
        flat.insert(flat.end(), b->bias.value.storage().begin(), b->bias.value.storage().end());
        snap.push_back(std::move(flat));
    }
    return snap;
}

std::vector<double> block_shift_mse(const BlockSnapshot& first, const BlockSnapshot& last) {
    if (first.size() != last.size()) throw ContractError("block_shift_mse: block count mismatch");
    std::vector<double> out;
    out.reserve(first.size());
    for (std::size_t b = 0; b < first.size(); ++b) {
        if (first[b].size() != last[b].size() || first[b].empty())
            throw ContractError("block_shift_mse: parameter shape mismatch in block " + std::to_string(b));
        double acc = 0.0;
        for (std::size_t i = 0; i < first[b].size(); ++i) {
            const double d = last[b][i] - first[b][i];
            acc += d * d;
        }
        out.push_back(acc / static_cast<double>(first[b].size()));
    }
    return out;
}

namespace {

Tensor centered(const Tensor& x) {
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<double> sums(d);
    kernels::column_sums(x.data(), sums, n, d);
    Tensor out = x;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out(i, j) -= sums[j] / static_cast<double>(n);
    return out;
}

double frobenius_sq(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data()) s += v * v;
    return s;
}

Tensor cross(const Tensor& a, const Tensor& b) {
    Tensor c({a.cols(), b.cols()});
    kernels::gemm_tn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

}  // namespace

double linear_cka(const Tensor& x, const Tensor& y) {
    if (x.rank() != 2 || y.rank() != 2) throw ContractError("linear_cka: inputs must be matrices");
    if (x.rows() != y.rows()) throw ContractError("linear_cka: row counts differ");
    if (x.rows() < 2) throw ContractError("linear_cka: need at least 2 samples");
    const Tensor xc = centered(x);
    const Tensor yc = centered(y);
    const double xx = std::sqrt(frobenius_sq(cross(xc, xc)));
    const double yy = std::sqrt(frobenius_sq(cross(yc, yc)));
    if (xx == 0.0 || yy == 0.0) return 0.0;
    return frobenius_sq(cross(yc, xc)) / (xx * yy);
}

std::vector<std::vector<double>> cka_matrix(std::span<const Tensor> reps) {
    const std::size_t k = reps.size();
    std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        m[i][i] = linear_cka(reps[i], reps[i]);
        for (std::size_t j = i + 1; j < k; ++j) m[i][j] = m[j][i] = linear_cka(reps[i], reps[j]);
    }
    return m;
}

BlockDepth block_depth_from_string(const std::string& s) {
    if (s == "shallow") return BlockDepth::shallow;
    if (s == "deep") return BlockDepth::deep;
    throw ContractError("unknown block depth '" + s + "' (expected shallow or deep)");
}

std::size_t block_index(const BackboneSpec& spec, BlockDepth depth) {
    return depth == BlockDepth::shallow ? 0 : spec.num_blocks - 1;
}

std::vector<std::vector<double>> cka_matrix(ExpandableModel& model, std::size_t block, const Tensor& batch) {
    if (model.num_tasks() < 2) throw ContractError("cka_matrix: need at least 2 backbones");
    if (block >= model.spec().num_blocks)
        throw ContractError("cka_matrix: block " + std::to_string(block) + " does not exist");
    std::vector<Tensor> reps;
    for (std::size_t b = 0; b < model.num_tasks(); ++b) reps.push_back(model.block_outputs(b, batch)[block]);
    return cka_matrix(reps);
}

std::vector<std::vector<double>> cka_matrix(ExpandableModel& model, BlockDepth depth, const Tensor& batch) {
    return cka_matrix(model, block_index(model.spec(), depth), batch);
}

double mean_off_diagonal(const std::vector<std::vector<double>>& m) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            if (i != j) {
                s += m[i][j];
                ++n;
            }
    if (n == 0) throw ContractError("mean_off_diagonal: matrix smaller than 2x2");
    return s / static_cast<double>(n);
}

}  // namespace cil
