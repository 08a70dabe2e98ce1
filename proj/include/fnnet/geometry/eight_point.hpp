#pragma once

#include <span>
#include <vector>

#include "fnnet/diffcore/graph.hpp"
#include "fnnet/geometry/jacobi.hpp"
#include "fnnet/geometry/types.hpp"

namespace fnnet::geometry {

// Coefficients of x̃2ᵀ E x̃1 against the row-major entries of E:
// [x1·x2, y1·x2, x2, x1·y2, y1·y2, y2, x1, y1, 1].
Vec9 design_row(const Correspondence& c);

// G = Xᵀ diag(w²) X.
Mat9 weighted_gram(const CorrespondenceSet& corrs, std::span<const double> weights);

// Flips v so its first entry with |v_i| > 1e-6 is positive.
void apply_sign_convention(Vec9& v);

struct EightPointResult {
  EssentialMatrix essential;
  Vec9 e;                // unit 9-vector after the sign convention
  SymmetricEigen eigen;  // of G; column 0 equals e
};

// Minimum eigengap between the two smallest eigenvalues of G, relative to the
// largest eigenvalue, below which the solve is reported as degenerate.
inline constexpr double kMinRelativeEigengap = 1e-12;

/// Weighted eight-point estimate: the smallest eigenvector of
/// G = Xᵀdiag(w²)X, found with cyclic Jacobi.
///
/// Throws DegenerateError when fewer than 8 weights are strictly positive or
/// when the two smallest eigenvalues of G are not separated; ContractError
/// for negative or non-finite weights.
EightPointResult weighted_eight_point(const CorrespondenceSet& corrs, std::span<const double> weights);

// Uniform-weight convenience overload.
EightPointResult eight_point(const CorrespondenceSet& corrs);

/// Backward pass of the smallest eigenpair of a symmetric G:
///   dL/dG = g_λ·v vᵀ + Σ_{k>0} (v_kᵀ g_v)/(λ_0 − λ_k) · v_k v_0ᵀ,
/// returned symmetrized (G only varies symmetrically).
Mat9 eig_backward(const SymmetricEigen& eigen, const Vec9& grad_v, double grad_lambda = 0.0);

// Chains dL/dG to the weights through G = Xᵀdiag(w²)X:
// dL/dw_n = 2·w_n·x_nᵀ (dL/dG) x_n.
std::vector<double> gram_weight_gradient(const CorrespondenceSet& corrs, std::span<const double> weights,
                                         const Mat9& grad_gram);

/// Differentiable weighted eight-point on a tape. `weights` holds N entries
/// (any shape); the result is the 9-vector ê. Throws DegenerateError like the
/// plain version.
diff::Var weighted_eight_point(diff::Var weights, const CorrespondenceSet& corrs);

}  // namespace fnnet::geometry
