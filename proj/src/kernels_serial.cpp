#include "cil/kernels.hpp"

namespace cil::kernels::serial {

void gemm(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
          std::span<double> y, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += x[i * k + t] * w[t * m + j];
            if (!bias.empty()) acc += bias[j];
            y[i * m + j] = acc;
        }
    }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t n,
             std::size_t p, std::size_t q) {
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) acc += a[r * p + i] * b[r * q + j];
            c[i * q + j] = acc;
        }
    }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t n,
             std::size_t m, std::size_t k) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < m; ++t) acc += a[i * m + t] * b[j * m + t];
            c[i * k + j] = acc;
        }
    }
}

void column_sums(std::span<const double> a, std::span<double> out, std::size_t n, std::size_t m) {
    for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += a[i * m + j];
        out[j] = acc;
    }
}

void squared_distances(std::span<const double> a, std::span<const double> center, std::span<double> out,
                       std::size_t n, std::size_t d) {
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = a[i * d + j] - center[j];
            acc += diff * diff;
        }
        out[i] = acc;
    }
}

}  // namespace cil::kernels::serial
