#include <doctest.h>

#include <cmath>
#include <limits>

#include "cil/errors.hpp"
#include "cil/probes.hpp"
#include "support/oracles.hpp"

using namespace cil;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Prng& rng) {
    Tensor t({r, c});
    for (auto& v : t.storage()) v = rng.normal();
    return t;
}

// Random orthogonal matrix by Gram-Schmidt.
Tensor random_rotation(std::size_t n, Prng& rng) {
    Tensor q = random_matrix(n, n, rng);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += q(i, j) * q(i, k);
            for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
        for (std::size_t i = 0; i < n; ++i) q(i, j) /= std::sqrt(norm);
    }
    return q;
}

}  // namespace

TEST_CASE("gradient norm of a single affine unit") {
    Block blk{Parameter("w", Tensor::matrix({{0.3}})), Parameter("b", Tensor::vector({0.0}))};
    Graph g;
    g.backward(g.sum(g.affine(g.constant(Tensor::matrix({{3.0}})), g.param(blk.weight), g.param(blk.bias))));
    Block* blocks[] = {&blk};
    const auto n = block_grad_norms(blocks);
    CHECK(n[0] == doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));
    blk.set_frozen(true);
    CHECK(block_grad_norms(blocks)[0] == 0.0);
}

TEST_CASE("per-block norms: finite differences and additivity") {
    auto model = ExpandableModel::create(Strategy::single, {4, 5, 3, 0}, 3, 17);
    Prng rng(2);
    const Tensor x = random_matrix(6, 4, rng);
    const std::vector<std::size_t> labels{0, 1, 2, 0, 1, 2};
    const LossFn loss = [&](Graph& g, ExpandableModel&, const ExpandableModel::Forward& f) {
        return g.softmax_cross_entropy(f.logits, labels);
    };
    const auto norms = grad_norm_per_block(model, x, loss);
    REQUIRE(norms.size() == 3);

    auto blocks = model.active_blocks();
    double total_sq = 0.0;
    for (std::size_t b = 0; b < 3; ++b) {
        auto eval = [&] {
            Graph g(Graph::Mode::inference);
            const auto fwd = model.forward(g, x);
            return g.value(loss(g, model, fwd))[0];
        };
        const Tensor gw = oracle::central_difference(eval, blocks[b]->weight.value);
        const Tensor gb = oracle::central_difference(eval, blocks[b]->bias.value);
        double sq = 0.0;
        for (double v : gw.storage()) sq += v * v;
        for (double v : gb.storage()) sq += v * v;
        CHECK(std::abs(norms[b] - std::sqrt(sq)) / std::sqrt(sq) < 1e-6);
        total_sq += norms[b] * norms[b];
    }
    // Whole-backbone norm squared is the sum of block norms squared.
    double whole = 0.0;
    for (auto* blk : blocks) {
        for (double v : blk->weight.grad.storage()) whole += v * v;
        for (double v : blk->bias.grad.storage()) whole += v * v;
    }
    CHECK(whole == doctest::Approx(total_sq).epsilon(1e-12));
}

TEST_CASE("non-finite loss is an error") {
    auto model = ExpandableModel::create(Strategy::single, {2, 3, 2, 0}, 2, 1);
    const LossFn loss = [](Graph& g, ExpandableModel&, const ExpandableModel::Forward& f) {
        return g.scale(g.sum(f.logits), std::numeric_limits<double>::infinity());
    };
    CHECK_THROWS_AS(grad_norm_per_block(model, Tensor::matrix({{1, 1}}), loss), NumericError);
}

TEST_CASE("block shift MSE") {
    const BlockSnapshot a{{1, 2, 3}, {0.5}};
    CHECK(block_shift_mse(a, a) == std::vector<double>{0, 0});
    BlockSnapshot ten_first{std::vector<double>(10, 0.0)}, ten_last{std::vector<double>(10, 0.1)};
    CHECK(block_shift_mse(ten_first, ten_last)[0] == doctest::Approx(0.01));
    CHECK(block_shift_mse({{0, 0}}, {{0.1, -0.3}})[0] == doctest::Approx(0.05));
    CHECK_THROWS_AS(block_shift_mse({{0, 0}}, {{0}}), ContractError);
    CHECK_THROWS_AS(block_shift_mse({{0}}, {{0}, {1}}), ContractError);
}

TEST_CASE("linear CKA: hand values and invariances") {
    Prng rng(8);
    const Tensor x = random_matrix(30, 6, rng);
    const Tensor y = random_matrix(30, 4, rng);
    CHECK(linear_cka(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    Tensor x2 = x;
    for (auto& v : x2.storage()) v *= 2.0;
    CHECK(linear_cka(x, x2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(linear_cka(Tensor::matrix({{1}, {-1}, {0}, {0}}), Tensor::matrix({{0}, {0}, {1}, {-1}})) == 0.0);
    CHECK(linear_cka(x, Tensor({30, 3}, 5.0)) == 0.0);
    CHECK_THROWS_AS(linear_cka(Tensor::matrix({{1, 2}}), Tensor::matrix({{1}})), ContractError);
    CHECK_THROWS_AS(linear_cka(x, random_matrix(29, 4, rng)), ContractError);

    const double base = linear_cka(x, y);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0 + 1e-9);
    CHECK(base == doctest::Approx(oracle::cka_gram(x, y)).epsilon(1e-10));
    CHECK(linear_cka(y, x) == doctest::Approx(base).epsilon(1e-12));
    for (int trial = 0; trial < 5; ++trial) {
        const Tensor q = random_rotation(6, rng);
        CHECK(linear_cka(oracle::matmul(x, q), y) == doctest::Approx(base).epsilon(1e-10));
    }
}

TEST_CASE("CKA matrix over backbones") {
    Prng rng(3);
    const Tensor a = random_matrix(20, 3, rng), b = random_matrix(20, 3, rng);
    const std::vector<Tensor> reps{a, b, a};
    const auto m = cka_matrix(reps);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(m[i][i] == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(m[i][j] - m[j][i]) < 1e-12);
    }
    CHECK(m[0][2] == doctest::Approx(1.0).epsilon(1e-12));

    const BackboneSpec spec{4, 5, 3, 0};
    auto model = ExpandableModel::create(Strategy::full_expand, spec, 2, 1);
    const Tensor batch = random_matrix(16, 4, rng);
    CHECK_THROWS_AS(cka_matrix(model, BlockDepth::shallow, batch), ContractError);
    model.expand_for_task(2, 2);
    // Copy backbone 0 into backbone 1: off-diagonal becomes 1.
    auto ps = model.parameters();
    for (std::size_t i = 0; i < 6; ++i) ps[6 + i]->value = ps[i]->value;
    const auto deep = cka_matrix(model, BlockDepth::deep, batch);
    CHECK(deep[0][1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mean_off_diagonal(deep) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(block_index(spec, BlockDepth::shallow) == 0);
    CHECK(block_index(spec, BlockDepth::deep) == 2);
    CHECK_THROWS_AS(block_depth_from_string("middle"), ContractError);
    CHECK_THROWS_AS(cka_matrix(model, std::size_t{3}, batch), ContractError);
}
