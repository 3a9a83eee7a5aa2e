#pragma once

#include <cstddef>
#include <span>

// Dense inner loops behind the autodiff engine, herding and CKA.
//
// Every kernel has a serial reference in `kernels::serial` and an OpenMP
// version in `kernels`. Both accumulate each output element in the same
// order, so their results are bitwise identical; the tests hold them to that.
namespace cil::kernels {

// y[n x m] = x[n x k] * w[k x m] (+ bias[m] when non-empty)
void gemm(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
          std::span<double> y, std::size_t n, std::size_t k, std::size_t m);

// c[p x q] = a[n x p]^T * b[n x q]
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t n,
             std::size_t p, std::size_t q);

// c[n x k] = a[n x m] * b[k x m]^T
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t n,
             std::size_t m, std::size_t k);

// out[j] = sum_i a[i, j]
void column_sums(std::span<const double> a, std::span<double> out, std::size_t n, std::size_t m);

// out[i] = || a[i, :] - center ||_2^2
void squared_distances(std::span<const double> a, std::span<const double> center, std::span<double> out,
                       std::size_t n, std::size_t d);

// Number of OpenMP threads the parallel kernels may use (1 without OpenMP).
int max_threads();

namespace serial {

void gemm(std::span<const double> x, std::span<const double> w, std::span<const double> bias,
          std::span<double> y, std::size_t n, std::size_t k, std::size_t m);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t n,
             std::size_t p, std::size_t q);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t n,
             std::size_t m, std::size_t k);
void column_sums(std::span<const double> a, std::span<double> out, std::size_t n, std::size_t m);
void squared_distances(std::span<const double> a, std::span<const double> center, std::span<double> out,
                       std::size_t n, std::size_t d);

}  // namespace serial
}  // namespace cil::kernels
