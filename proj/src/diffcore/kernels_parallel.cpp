#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fnnet/diffcore/kernels.hpp"

namespace fnnet::kernels {

namespace {
// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 15;

inline double dot4(const double* x, const double* y, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t p = 0;
  for (; p + 4 <= n; p += 4) {
    s0 += x[p] * y[p];
    s1 += x[p + 1] * y[p + 1];
    s2 += x[p + 2] * y[p + 2];
    s3 += x[p + 3] * y[p + 3];
  }
  for (; p < n; ++p) s0 += x[p] * y[p];
  return (s0 + s1) + (s2 + s3);
}

constexpr std::size_t kRowTile = 4;
constexpr std::size_t kColTile = 16;

inline double a_at(Trans ta, GemmDims d, const double* a, std::size_t i, std::size_t p) {
  return ta == Trans::kNo ? a[i * d.k + p] : a[p * d.m + i];
}

void nn_tile(Trans ta, GemmDims d, const double* a, const double* b, double* c, std::size_t i0, std::size_t j0) {
  double acc[kRowTile][kColTile] = {};
  for (std::size_t p = 0; p < d.k; ++p) {
    const double* brow = b + p * d.n + j0;
    for (std::size_t r = 0; r < kRowTile; ++r) {
      const double av = a_at(ta, d, a, i0 + r, p);
#pragma omp simd
      for (std::size_t j = 0; j < kColTile; ++j) acc[r][j] += av * brow[j];
    }
  }
  for (std::size_t r = 0; r < kRowTile; ++r) {
    double* crow = c + (i0 + r) * d.n + j0;
#pragma omp simd
    for (std::size_t j = 0; j < kColTile; ++j) crow[j] += acc[r][j];
  }
}

void nn_edge(Trans ta, GemmDims d, const double* a, const double* b, double* c, std::size_t i0, std::size_t i1,
             std::size_t j0, std::size_t j1) {
  for (std::size_t i = i0; i < i1; ++i)
    for (std::size_t j = j0; j < j1; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < d.k; ++p) s += a_at(ta, d, a, i, p) * b[p * d.n + j];
      c[i * d.n + j] += s;
    }
}

// Dot products of two rows of A with four consecutive rows of B (row stride k).
void dot_2x4(const double* a0, const double* a1, const double* b, std::size_t k, double* out) {
  constexpr std::size_t kLanes = 8;
  double acc[8][kLanes] = {};
  const double* bq[4] = {b, b + k, b + 2 * k, b + 3 * k};
  std::size_t p = 0;
  for (; p + kLanes <= k; p += kLanes) {
    for (std::size_t q = 0; q < 4; ++q) {
#pragma omp simd
      for (std::size_t l = 0; l < kLanes; ++l) {
        acc[q][l] += a0[p + l] * bq[q][p + l];
        acc[4 + q][l] += a1[p + l] * bq[q][p + l];
      }
    }
  }
  for (std::size_t q = 0; q < 8; ++q) {
    double s = 0.0;
    for (std::size_t l = 0; l < kLanes; ++l) s += acc[q][l];
    const double* ar = q < 4 ? a0 : a1;
    const double* br = bq[q % 4];
    for (std::size_t r = p; r < k; ++r) s += ar[r] * br[r];
    out[q] = s;
  }
}
}  // namespace

int max_threads() { return omp_get_max_threads(); }

namespace parallel {

void gemm(Trans ta, Trans tb, GemmDims d, const double* a, const double* b, double* c) {
  const bool big = d.m * d.n * d.k >= kParallelWork;
  if (tb == Trans::kNo) {
    // Register tiles of C: kRowTile rows by kColTile columns, accumulated over
    // the whole k range before touching memory. Edge tiles take the scalar path.
    const std::size_t row_tiles = (d.m + kRowTile - 1) / kRowTile;
    const std::size_t col_tiles = (d.n + kColTile - 1) / kColTile;
    const auto tiles = static_cast<std::ptrdiff_t>(row_tiles * col_tiles);
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t t = 0; t < tiles; ++t) {
      const std::size_t i0 = static_cast<std::size_t>(t) / col_tiles * kRowTile;
      const std::size_t j0 = static_cast<std::size_t>(t) % col_tiles * kColTile;
      if (i0 + kRowTile <= d.m && j0 + kColTile <= d.n)
        nn_tile(ta, d, a, b, c, i0, j0);
      else
        nn_edge(ta, d, a, b, c, i0, std::min(i0 + kRowTile, d.m), j0, std::min(j0 + kColTile, d.n));
    }
    return;
  }

  const auto m = static_cast<std::ptrdiff_t>(d.m);
  const std::size_t n = d.n, k = d.k;
  if (ta == Trans::kNo) {
    // C[i,j] = dot(row i of A, row j of B), two rows of A against four rows of B at a time.
    const std::ptrdiff_t pairs = (m + 1) / 2;
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t ip = 0; ip < pairs; ++ip) {
      const std::size_t i = static_cast<std::size_t>(ip) * 2;
      const double* a0 = a + i * k;
      if (i + 1 < d.m) {
        const double* a1 = a0 + k;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
          double s[8];
          dot_2x4(a0, a1, b + j * k, k, s);
          for (std::size_t q = 0; q < 4; ++q) {
            c[i * n + j + q] += s[q];
            c[(i + 1) * n + j + q] += s[4 + q];
          }
        }
        for (; j < n; ++j) {
          c[i * n + j] += dot4(a0, b + j * k, k);
          c[(i + 1) * n + j] += dot4(a1, b + j * k, k);
        }
      } else {
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot4(a0, b + j * k, k);
      }
    }
    return;
  }

#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[p * d.m + i] * b[j * k + p];
      c[i * n + j] += s;
    }
  }
}

void add_row_bias(std::size_t rows, std::size_t cols, const double* bias, double* out) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
    const double br = bias[r];
    double* o = out + r * cols;
#pragma omp simd
    for (std::size_t c = 0; c < cols; ++c) o[c] += br;
  }
}

void sum_rows_into(std::size_t rows, std::size_t cols, const double* x, double* out) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
    const double* xr = x + r * cols;
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += xr[c];
    out[r] += s;
  }
}

void normalize_rows(std::size_t rows, std::size_t cols, double eps, const double* x, double* out,
                    double* inv_std) {
  const double n = static_cast<double>(cols);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
    const double* xr = x + r * cols;
    double* o = out + r * cols;
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += xr[c];
    mean /= n;
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= n;
    const double s = 1.0 / std::sqrt(var + eps);
    inv_std[r] = s;
#pragma omp simd
    for (std::size_t c = 0; c < cols; ++c) o[c] = (xr[c] - mean) * s;
  }
}

void normalize_rows_backward(std::size_t rows, std::size_t cols, const double* y,
                             const double* inv_std, const double* dy, double* dx) {
  const double n = static_cast<double>(cols);
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
    const double* yr = y + r * cols;
    const double* gr = dy + r * cols;
    double* xr = dx + r * cols;
    double mean_g = 0.0, mean_gy = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      mean_g += gr[c];
      mean_gy += gr[c] * yr[c];
    }
    mean_g /= n;
    mean_gy /= n;
    const double s = inv_std[r];
#pragma omp simd
    for (std::size_t c = 0; c < cols; ++c) xr[c] += s * (gr[c] - mean_g - yr[c] * mean_gy);
  }
}

void softmax_rows(std::size_t rows, std::size_t cols, const double* x, double* out) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
    const double* xr = x + r * cols;
    double* o = out + r * cols;
    const double mx = *std::max_element(xr, xr + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      o[c] = std::exp(xr[c] - mx);
      z += o[c];
    }
    for (std::size_t c = 0; c < cols; ++c) o[c] /= z;
  }
}

void softmax_rows_backward(std::size_t rows, std::size_t cols, const double* y, const double* dy,
                           double* dx) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
    const double* yr = y + r * cols;
    const double* gr = dy + r * cols;
    double dot = 0.0;
    for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * yr[c];
    double* xr = dx + r * cols;
#pragma omp simd
    for (std::size_t c = 0; c < cols; ++c) xr[c] += yr[c] * (gr[c] - dot);
  }
}

void softmax_cols(std::size_t rows, std::size_t cols, const double* x, double* out) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cols); ++c) {
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
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cols); ++c) {
    double dot = 0.0;
    for (std::size_t r = 0; r < rows; ++r) dot += dy[r * cols + c] * y[r * cols + c];
    for (std::size_t r = 0; r < rows; ++r)
      dx[r * cols + c] += y[r * cols + c] * (dy[r * cols + c] - dot);
  }
}

}  // namespace parallel
}  // namespace fnnet::kernels
