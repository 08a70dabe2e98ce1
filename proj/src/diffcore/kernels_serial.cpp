#include <algorithm>
#include <cmath>
#include <vector>

#include "fnnet/diffcore/kernels.hpp"

namespace fnnet::kernels::serial {

void gemm(Trans ta, Trans tb, GemmDims d, const double* a, const double* b, double* c) {
  // op(A)[i,p] and op(B)[p,j] read through the stored layouts.
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t j = 0; j < d.n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < d.k; ++p) {
        const double av = ta == Trans::kNo ? a[i * d.k + p] : a[p * d.m + i];
        const double bv = tb == Trans::kNo ? b[p * d.n + j] : b[j * d.k + p];
        s += av * bv;
      }
      c[i * d.n + j] += s;
    }
  }
}

void add_row_bias(std::size_t rows, std::size_t cols, const double* bias, double* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bias[r];
}

void sum_rows_into(std::size_t rows, std::size_t cols, const double* x, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += x[r * cols + c];
    out[r] += s;
  }
}

void normalize_rows(std::size_t rows, std::size_t cols, double eps, const double* x, double* out,
                    double* inv_std) {
  const double n = static_cast<double>(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += xr[c];
    mean /= n;
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= n;
    const double s = 1.0 / std::sqrt(var + eps);
    inv_std[r] = s;
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = (xr[c] - mean) * s;
  }
}

void normalize_rows_backward(std::size_t rows, std::size_t cols, const double* y,
                             const double* inv_std, const double* dy, double* dx) {
  const double n = static_cast<double>(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* yr = y + r * cols;
    const double* gr = dy + r * cols;
    double mean_g = 0.0, mean_gy = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      mean_g += gr[c];
      mean_gy += gr[c] * yr[c];
    }
    mean_g /= n;
    mean_gy /= n;
    for (std::size_t c = 0; c < cols; ++c)
      dx[r * cols + c] += inv_std[r] * (gr[c] - mean_g - yr[c] * mean_gy);
  }
}

void softmax_rows(std::size_t rows, std::size_t cols, const double* x, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    double* orow = out + r * cols;
    const double mx = *std::max_element(xr, xr + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      orow[c] = std::exp(xr[c] - mx);
      z += orow[c];
    }
    for (std::size_t c = 0; c < cols; ++c) orow[c] /= z;
  }
}

void softmax_rows_backward(std::size_t rows, std::size_t cols, const double* y, const double* dy,
                           double* dx) {
  for (std::size_t r = 0; r < rows; ++r) {
    double dot = 0.0;
    for (std::size_t c = 0; c < cols; ++c) dot += dy[r * cols + c] * y[r * cols + c];
    for (std::size_t c = 0; c < cols; ++c)
      dx[r * cols + c] += y[r * cols + c] * (dy[r * cols + c] - dot);
  }
}

void softmax_cols(std::size_t rows, std::size_t cols, const double* x, double* out) {
  for (std::size_t c = 0; c < cols; ++c) {
    double mx = x[c];
    for (std::size_t r = 1; r < rows; ++r) mx = std::max(mx, x[r * cols + c]);
    double z = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      out[r * cols + c] = std::exp(x[r * cols + c] - mx);
      z += out[r * cols + c];
    }
    for (std::size_t r = 0; r < rows; ++r) out[r * cols + c] /= z;
  }
}

void softmax_cols_backward(std::size_t rows, std::size_t cols, const double* y, const double* dy,
                           double* dx) {
  for (std::size_t c = 0; c < cols; ++c) {
    double dot = 0.0;
    for (std::size_t r = 0; r < rows; ++r) dot += dy[r * cols + c] * y[r * cols + c];
    for (std::size_t r = 0; r < rows; ++r)
      dx[r * cols + c] += y[r * cols + c] * (dy[r * cols + c] - dot);
  }
}

}  // namespace fnnet::kernels::serial
