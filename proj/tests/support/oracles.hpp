#pragma once
// Independent reference computations used only by the tests.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "cil/tensor.hpp"

namespace oracle {

// Straight transcription of the published splitmix64 step.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Triple loop, no blocking.
inline cil::Tensor matmul(const cil::Tensor& a, const cil::Tensor& b) {
    cil::Tensor c({a.rows(), b.cols()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

// Central differences of f with respect to every entry of x.
inline cil::Tensor central_difference(const std::function<double()>& f, cil::Tensor& x, double h = 1e-5) {
    cil::Tensor g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double up = f();
        x[i] = saved - h;
        const double down = f();
        x[i] = saved;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

// Linear CKA through Gram matrices, HSIC form: tr(K H L H) normalized.
inline double cka_gram(const cil::Tensor& x, const cil::Tensor& y) {
    const std::size_t n = x.rows();
    auto gram = [n](const cil::Tensor& a) {
        std::vector<double> k(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < a.cols(); ++c) s += a(i, c) * a(j, c);
                k[i * n + j] = s;
            }
        // Double centering H K H.
        std::vector<double> row(n, 0.0), col(n, 0.0);
        double all = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                row[i] += k[i * n + j] / n;
                col[j] += k[i * n + j] / n;
                all += k[i * n + j] / (double(n) * n);
            }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) k[i * n + j] = k[i * n + j] - row[i] - col[j] + all;
        return k;
    };
    const auto k = gram(x), l = gram(y);
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    const double den = std::sqrt(dot(k, k) * dot(l, l));
    return den == 0.0 ? 0.0 : dot(k, l) / den;
}

}  // namespace oracle
