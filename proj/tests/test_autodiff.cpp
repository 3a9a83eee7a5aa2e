#include <doctest.h>

#include <array>
#include <cmath>

#include "cil/autodiff.hpp"
#include "cil/errors.hpp"
#include "cil/prng.hpp"
#include "support/oracles.hpp"

using namespace cil;

namespace {

Parameter random_param(const char* name, std::size_t r, std::size_t c, Prng& rng) {
    Tensor t({r, c});
    for (auto& v : t.storage()) v = rng.uniform(-1.0, 1.0);
    return Parameter(name, t);
}

// Checks every parameter gradient of `loss` against central differences.
void check_gradients(const std::function<Var(Graph&)>& build, std::vector<Parameter*> params, double tol = 1e-6) {
    Graph g;
    const Var loss = build(g);
    for (auto* p : params) p->zero_grad();
    g.backward(loss);
    for (auto* p : params) {
        auto f = [&] {
            Graph h(Graph::Mode::inference);
            return h.value(build(h))[0];
        };
        const Tensor numeric = oracle::central_difference(f, p->value);
        for (std::size_t i = 0; i < numeric.size(); ++i)
            CHECK(oracle::relative_error(p->grad[i], numeric[i]) < tol);
    }
}

}  // namespace

TEST_CASE("hand-computed affine gradient") {
    // y = w * x + b with x = 3: dy/dw = 3, dy/db = 1.
    Parameter w("w", Tensor::matrix({{0.7}}));
    Parameter b("b", Tensor::vector({0.2}));
    Graph g;
    const Var y = g.affine(g.constant(Tensor::matrix({{3.0}})), g.param(w), g.param(b));
    g.backward(g.sum(y));
    CHECK(w.grad[0] == doctest::Approx(3.0));
    CHECK(b.grad[0] == doctest::Approx(1.0));
}

TEST_CASE("cross entropy of uniform logits is log C") {
    Graph g;
    const std::vector<std::size_t> labels{0, 1};
    const Var l = g.softmax_cross_entropy(g.constant(Tensor::matrix({{0, 0}, {0, 0}})), labels);
    CHECK(g.value(l)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("softmax is shift invariant and stable for large logits") {
    const auto a = softmax_rows(Tensor::matrix({{1, 2, 3}}));
    const auto b = softmax_rows(Tensor::matrix({{1001, 1002, 1003}}));
    CHECK(max_abs_diff(a, b) < 1e-12);
    Graph g;
    const std::vector<std::size_t> labels{2};
    const Var l = g.softmax_cross_entropy(g.constant(Tensor::matrix({{1000, 0, 1000}})), labels);
    CHECK(std::isfinite(g.value(l)[0]));
}

TEST_CASE("kd term equals cross entropy of old soft targets") {
    // Identical logits over the old columns: KD equals the softmax entropy.
    Graph g;
    const auto old = Tensor::matrix({{0.0, 0.0}});
    const Var kd = g.kd_term(g.constant(Tensor::matrix({{0.0, 0.0, 5.0}})), old);
    CHECK(g.value(kd)[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(g.kd_term(g.constant(Tensor::matrix({{0.0}})), old), ContractError);
}

TEST_CASE("relu subgradient at zero is zero") {
    Parameter x("x", Tensor::vector({-1.0, 0.0, 2.0}));
    Graph g;
    g.backward(g.sum(g.relu(g.param(x))));
    CHECK(x.grad == Tensor::vector({0.0, 0.0, 1.0}));
}

TEST_CASE("finite-difference agreement for every op") {
    Prng rng(5);
    auto x = random_param("x", 4, 3, rng);
    auto w = random_param("w", 3, 5, rng);
    auto b = random_param("b", 1, 5, rng);
    auto w2 = random_param("w2", 8, 2, rng);
    check_gradients(
        [&](Graph& g) {
            const Var px = g.param(x);
            const Var h = g.relu(g.affine(px, g.param(w), g.param(b)));  // 4 x 5
            const Var z = g.add(h, g.scale(h, 0.5));
            const std::array<Var, 2> parts{z, px};
            const Var cat = g.concat_cols(parts);  // 4 x 8
            return g.sum(g.linear(cat, g.param(w2)));
        },
        {&x, &w, &b, &w2});
}

TEST_CASE("finite-difference agreement through cross entropy and distillation") {
    Prng rng(6);
    auto x = random_param("x", 4, 3, rng);
    auto w = random_param("w", 3, 4, rng);
    auto b = random_param("b", 1, 4, rng);
    const std::vector<std::size_t> labels{0, 3, 1, 2};
    const auto old = Tensor::matrix({{0.1, -0.3}, {1.0, 0.2}, {0.0, 0.0}, {-2.0, 0.5}});
    check_gradients(
        [&](Graph& g) {
            const Var logits = g.affine(g.param(x), g.param(w), g.param(b));
            const Var ce = g.softmax_cross_entropy(logits, labels);
            const Var kd = g.kd_term(logits, old);
            return g.add(g.scale(ce, 0.4), g.scale(kd, 0.6));
        },
        {&x, &w, &b});
}

TEST_CASE("frozen parameters receive no gradient") {
    Prng rng(7);
    auto w = random_param("w", 3, 2, rng);
    w.frozen = true;
    Graph g;
    const Var y = g.linear(g.constant(Tensor::matrix({{1, 2, 3}})), g.param(w));
    CHECK_FALSE(g.requires_grad(y));
}

TEST_CASE("backward contract") {
    Parameter w("w", Tensor::matrix({{1.0, 2.0}}));
    Graph g;
    const Var y = g.param(w);
    CHECK_THROWS_AS(g.backward(y), ContractError);  // not a scalar
    const Var s = g.sum(y);
    g.backward(s);
    CHECK_THROWS_AS(g.backward(s), ContractError);  // single use
    g.reset();
    CHECK(g.size() == 0);
}

TEST_CASE("non-finite values are rejected") {
    Graph g;
    const Var a = g.constant(Tensor::vector({1e308}));
    CHECK_THROWS_AS(g.scale(a, 1e10), NumericError);
}

TEST_CASE("argmax takes the lowest index on ties") {
    const auto idx = argmax_rows(Tensor::matrix({{1, 3, 3}, {2, 2, 1}}));
    CHECK(idx == std::vector<std::size_t>{1, 0});
}
