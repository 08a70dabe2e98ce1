#pragma once

#include <cstddef>
#include <string>

#include "fnnet/diffcore/graph.hpp"
#include "fnnet/diffcore/kernels.hpp"

namespace fnnet::diff {

enum class Mode { kTrain, kEval };

enum class SoftThresholdKind { kLinear, kQuadratic };

std::string to_string(SoftThresholdKind kind);
SoftThresholdKind soft_threshold_kind_from_string(const std::string& s);

// Scalar soft-threshold. Linear: sign(x)·max(|x|−t, 0).
// Quadratic: sign(x)·u·(1+u) with u = max(|x|−t, 0).
double soft_threshold_value(double x, double t, SoftThresholdKind kind);

inline constexpr double kNormEps = 1e-5;

/// Shared per-point linear map (a 1x1 convolution):
/// out[c,n] = sum_k W[c,k]·x[k,n] + b[c]. x: Cin×N, W: Cout×Cin, b: Cout.
Var linear_map(Var x, Var w, Var b);

// C = op(A)·op(B) for rank-2 operands.
Var matmul(Var a, Var b, kernels::Trans ta = kernels::Trans::kNo,
           kernels::Trans tb = kernels::Trans::kNo);

Var add(Var a, Var b);
Var mul(Var a, Var b);  // elementwise, same shape
Var scale(Var a, double s);
Var concat_rows(Var a, Var b);
Var reshape(Var a, Shape shape);

Var relu(Var x);
Var tanh(Var x);
Var sigmoid(Var x);
Var abs(Var x);

/// Per-row standardization over the correspondence axis of a C×N map:
/// out[c,:] = (f[c,:] − mean) / sqrt(var + eps). Requires N ≥ 2.
Var context_normalize(Var f, double eps = kNormEps);

// Batch normalization with learned affine and running statistics.
struct BatchNorm {
  Parameter gamma;
  Parameter beta;
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.9;
  double eps = kNormEps;

  BatchNorm() = default;
  BatchNorm(const std::string& name, std::size_t features);
};

/// Normalizes a rank-2 tensor over `batch_axis`; the other axis indexes features.
/// Train mode uses batch statistics and folds them into the running stats as
/// m·old + (1−m)·batch. With a single-sample batch the batch variance is
/// undefined, so train mode normalizes with the running statistics and still
/// updates them (mean with the sample, variance with its squared deviation).
/// Eval mode only reads the running statistics.
Var batch_norm(Var x, BatchNorm& bn, Mode mode, std::size_t batch_axis);

// Mean over `axis`, dropping it. Rank 1 or 2.
Var mean_axis(Var x, std::size_t axis);
Var sum_all(Var x);
// Softmax along `axis` of a rank-2 tensor (rank 1 is treated as one row).
Var softmax_axis(Var x, std::size_t axis);

/// Channel-wise soft threshold of a C×N map with thresholds t[C] ≥ 0.
/// Gradients use 0 at the kinks |x| = t.
Var soft_threshold(Var x, Var t, SoftThresholdKind kind);

}  // namespace fnnet::diff
