#pragma once

#include <cstddef>

// Dense inner-loop kernels. Every kernel comes in two flavours: the primary
// one, which parallelizes with OpenMP when the work is large enough, and a
// plain serial reference (`*_ref`) kept for testing. Each output element is
// produced by exactly one thread with a fixed summation order, so primary and
// reference are bit-identical for any thread count.
//
// All matrices are row-major doubles.
namespace wee::kern {

// Work size (in multiply-adds) below which parallelizing is not worth it.
inline constexpr std::size_t kParallelWorkMin = 1 << 15;

// C = A(m x k) * B(k x n)
void matmul_nn(double* c, const double* a, const double* b, int m, int k, int n);
void matmul_nn_ref(double* c, const double* a, const double* b, int m, int k, int n);

// C = A(m x k) * B(n x k)^T
void matmul_nt(double* c, const double* a, const double* b, int m, int k, int n);
void matmul_nt_ref(double* c, const double* a, const double* b, int m, int k, int n);

// Accumulating variants used by backward passes.
// C(m x n) += A(m x k) * B(k x n)
void acc_nn(double* c, const double* a, const double* b, int m, int k, int n);
void acc_nn_ref(double* c, const double* a, const double* b, int m, int k, int n);
// C(m x n) += A(m x k) * B(n x k)^T
void acc_nt(double* c, const double* a, const double* b, int m, int k, int n);
void acc_nt_ref(double* c, const double* a, const double* b, int m, int k, int n);
// C(k x n) += A(m x k)^T * B(m x n)
void acc_tn(double* c, const double* a, const double* b, int m, int k, int n);
void acc_tn_ref(double* c, const double* a, const double* b, int m, int k, int n);

// Exact-erf GELU, elementwise.
double gelu_scalar(double x);
double gelu_grad_scalar(double x);
void gelu(double* y, const double* x, std::size_t n);
void gelu_ref(double* y, const double* x, std::size_t n);
// dx += dy * gelu'(x)
void gelu_grad_acc(double* dx, const double* dy, const double* x, std::size_t n);

// Row-wise softmax with max subtraction; rows are independent.
void softmax_rows(double* y, const double* x, int rows, int cols);
void softmax_rows_ref(double* y, const double* x, int rows, int cols);

// Magnitudes of the naive DFT of one frame, bins 0..len/2 (inclusive).
// Serial; callers parallelize across frames.
void dft_magnitudes(double* mags, const double* frame, int len);

}  // namespace wee::kern
