#pragma once

// Dense inner loops behind the differentiable ops. Every kernel exists twice:
// `parallel` (OpenMP, what the ops call) and `serial` (plain loops, kept as
// the reference the tests and the benchmark compare against).
//
// Matrices are row-major. Each output element is owned by exactly one thread,
// so parallel results do not depend on the thread count.

#include <cstddef>

namespace fnnet::kernels {

enum class Trans { kNo, kYes };

// Dimensions of C += op(A) * op(B) with op(A): m x k, op(B): k x n.
struct GemmDims {
  std::size_t m, n, k;
};

namespace serial {

void gemm(Trans ta, Trans tb, GemmDims d, const double* a, const double* b, double* c);
void add_row_bias(std::size_t rows, std::size_t cols, const double* bias, double* out);
void sum_rows_into(std::size_t rows, std::size_t cols, const double* x, double* out);

// Per-row standardization: out = (x - mean) / sqrt(var + eps), population variance.
// `inv_std` receives one value per row.
void normalize_rows(std::size_t rows, std::size_t cols, double eps, const double* x, double* out,
                    double* inv_std);
// Gradient of normalize_rows given its output `y` and `inv_std`; accumulates into dx.
void normalize_rows_backward(std::size_t rows, std::size_t cols, const double* y,
                             const double* inv_std, const double* dy, double* dx);

// Softmax along rows (axis 1) of a rows x cols matrix.
void softmax_rows(std::size_t rows, std::size_t cols, const double* x, double* out);
void softmax_rows_backward(std::size_t rows, std::size_t cols, const double* y, const double* dy,
                           double* dx);
// Softmax along columns (axis 0).
void softmax_cols(std::size_t rows, std::size_t cols, const double* x, double* out);
void softmax_cols_backward(std::size_t rows, std::size_t cols, const double* y, const double* dy,
                           double* dx);

}  // namespace serial

namespace parallel {

void gemm(Trans ta, Trans tb, GemmDims d, const double* a, const double* b, double* c);
void add_row_bias(std::size_t rows, std::size_t cols, const double* bias, double* out);
void sum_rows_into(std::size_t rows, std::size_t cols, const double* x, double* out);
void normalize_rows(std::size_t rows, std::size_t cols, double eps, const double* x, double* out,
                    double* inv_std);
void normalize_rows_backward(std::size_t rows, std::size_t cols, const double* y,
                             const double* inv_std, const double* dy, double* dx);
void softmax_rows(std::size_t rows, std::size_t cols, const double* x, double* out);
void softmax_rows_backward(std::size_t rows, std::size_t cols, const double* y, const double* dy,
                           double* dx);
void softmax_cols(std::size_t rows, std::size_t cols, const double* x, double* out);
void softmax_cols_backward(std::size_t rows, std::size_t cols, const double* y, const double* dy,
                           double* dx);

}  // namespace parallel

int max_threads();

}  // namespace fnnet::kernels
