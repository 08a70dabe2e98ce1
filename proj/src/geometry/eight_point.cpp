#include "fnnet/geometry/eight_point.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "fnnet/error.hpp"

namespace fnnet::geometry {

Vec9 design_row(const Correspondence& c) {
  const double x1 = c[0], y1 = c[1], x2 = c[2], y2 = c[3];
  Vec9 r;
  r << x1 * x2, y1 * x2, x2, x1 * y2, y1 * y2, y2, x1, y1, 1.0;
  return r;
}

Mat9 weighted_gram(const CorrespondenceSet& corrs, std::span<const double> weights) {
  if (weights.size() != corrs.size())
    throw DimensionError("weighted_gram: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(corrs.size()) + " correspondences");
  Mat9 g = Mat9::Zero();
  for (std::size_t n = 0; n < corrs.size(); ++n) {
    const double w2 = weights[n] * weights[n];
    if (w2 == 0.0) continue;
    const Vec9 x = design_row(corrs.points[n]);
    g.selfadjointView<Eigen::Upper>().rankUpdate(x, w2);
  }
  return g.selfadjointView<Eigen::Upper>();
}

void apply_sign_convention(Vec9& v) {
  for (int i = 0; i < 9; ++i) {
    if (std::abs(v[i]) > 1e-6) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

EightPointResult weighted_eight_point(const CorrespondenceSet& corrs, std::span<const double> weights) {
  if (weights.size() != corrs.size())
    throw DimensionError("weighted_eight_point: weight count differs from correspondence count");
  std::size_t support = 0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw ContractError("weighted_eight_point: weights must be finite and >= 0");
    support += w > 0.0;
  }
  if (support < 8)
    throw DegenerateError("weighted_eight_point: insufficient support (" + std::to_string(support) +
                          " positive weights, need 8)");

  const Mat9 g = weighted_gram(corrs, weights);
  SymmetricEigen eig = jacobi_eigen(g);
  const double scale = std::max(std::abs(eig.values[8]), std::numeric_limits<double>::min());
  if (eig.values[1] - eig.values[0] < kMinRelativeEigengap * scale)
    throw DegenerateError("weighted_eight_point: degenerate configuration (eigengap " +
                          std::to_string(eig.values[1] - eig.values[0]) + ")");

  Vec9 e = eig.vectors.col(0);
  e.normalize();
  apply_sign_convention(e);
  eig.vectors.col(0) = e;
  return EightPointResult{EssentialMatrix::from_vector(e), e, std::move(eig)};
}

EightPointResult eight_point(const CorrespondenceSet& corrs) {
  const std::vector<double> w(corrs.size(), 1.0);
  return weighted_eight_point(corrs, w);
}

Mat9 eig_backward(const SymmetricEigen& eigen, const Vec9& grad_v, double grad_lambda) {
  const Vec9 v0 = eigen.vectors.col(0);
  Vec9 u = Vec9::Zero();
  for (int k = 1; k < 9; ++k) {
    const Vec9 vk = eigen.vectors.col(k);
    const double gap = eigen.values[0] - eigen.values[k];
    if (gap == 0.0) throw DegenerateError("eig_backward: repeated smallest eigenvalue");
    u += (vk.dot(grad_v) / gap) * vk;
  }
  const Mat9 m = grad_lambda * v0 * v0.transpose() + u * v0.transpose();
  return 0.5 * (m + m.transpose());
}

std::vector<double> gram_weight_gradient(const CorrespondenceSet& corrs, std::span<const double> weights,
                                         const Mat9& grad_gram) {
  std::vector<double> out(corrs.size(), 0.0);
  for (std::size_t n = 0; n < corrs.size(); ++n) {
    if (weights[n] == 0.0) continue;
    const Vec9 x = design_row(corrs.points[n]);
    out[n] = 2.0 * weights[n] * x.dot(grad_gram * x);
  }
  return out;
}

diff::Var weighted_eight_point(diff::Var weights, const CorrespondenceSet& corrs) {
  const diff::Tensor& wv = weights.value();
  auto result = std::make_shared<EightPointResult>(weighted_eight_point(corrs, wv.data()));
  diff::Tensor out(diff::Shape{9});
  for (int i = 0; i < 9; ++i) out[i] = result->e[i];

  // The closure reads correspondences by pointer: `corrs` must outlive backward().
  const CorrespondenceSet* cs = &corrs;
  return weights.graph().record(
      "weighted_eight_point", std::move(out), {weights},
      [weights, result, cs](diff::Graph& g, const diff::Tensor&, const diff::Tensor& gy) {
        Vec9 gv;
        for (int i = 0; i < 9; ++i) gv[i] = gy[i];
        const Mat9 gg = eig_backward(result->eigen, gv);
        const auto gw = gram_weight_gradient(*cs, g.value(weights).data(), gg);
        diff::Tensor& acc = g.grad(weights);
        for (std::size_t n = 0; n < gw.size(); ++n) acc[n] += gw[n];
      });
}

}  // namespace fnnet::geometry
