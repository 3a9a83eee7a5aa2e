#include <algorithm>
#include <cstdint>
#include <vector>

#include "cil/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cil::kernels {

namespace {
// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 15;

std::int64_t as_i64(std::size_t v) { return static_cast<std::int64_t>(v); }
}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Rows of y are independent; within a row, the k-loop runs outermost so the
// accumulation order per element matches the serial (i, j, k) loop.
void gemm(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
          std::span<double> y, std::size_t n, std::size_t k, std::size_t m) {
    const bool par = n * k * m >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t ii = 0; ii < as_i64(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* yrow = y.data() + i * m;
        std::fill_n(yrow, m, 0.0);
        for (std::size_t t = 0; t < k; ++t) {
            const double xv = x[i * k + t];
            const double* wrow = w.data() + t * m;
            for (std::size_t j = 0; j < m; ++j) yrow[j] += xv * wrow[j];
        }
        if (!bias.empty())
            for (std::size_t j = 0; j < m; ++j) yrow[j] += bias[j];
    }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t n,
             std::size_t p, std::size_t q) {
    const bool par = n * p * q >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t ii = 0; ii < as_i64(p); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* crow = c.data() + i * q;
        std::fill_n(crow, q, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            const double av = a[r * p + i];
            const double* brow = b.data() + r * q;
            for (std::size_t j = 0; j < q; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t n,
             std::size_t m, std::size_t k) {
    const bool par = n * m * k >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t ii = 0; ii < as_i64(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* arow = a.data() + i * m;
        for (std::size_t j = 0; j < k; ++j) {
            const double* brow = b.data() + j * m;
            double acc = 0.0;
            for (std::size_t t = 0; t < m; ++t) acc += arow[t] * brow[t];
            c[i * k + j] = acc;
        }
    }
}

void column_sums(std::span<const double> a, std::span<double> out, std::size_t n, std::size_t m) {
    const bool par = n * m >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t jj = 0; jj < as_i64(m); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += a[i * m + j];
        out[j] = acc;
    }
}

void squared_distances(std::span<const double> a, std::span<const double> center, std::span<double> out,
                       std::size_t n, std::size_t d) {
    const bool par = n * d >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (std::int64_t ii = 0; ii < as_i64(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = a[i * d + j] - center[j];
            acc += diff * diff;
        }
        out[i] = acc;
    }
}

}  // namespace cil::kernels
