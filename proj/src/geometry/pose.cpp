#include "fnnet/geometry/pose.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "fnnet/error.hpp"
#include "fnnet/geometry/jacobi.hpp"

namespace fnnet::geometry {

Mat3 rotation_from_axis_angle(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

std::array<Pose, 4> essential_candidates(const EssentialMatrix& e) {
  const Mat3& m = e.matrix();
  // Right singular vectors from EᵀE; eigenvalues ascend so column 0 spans the null space.
  const SymmetricEigen eig = jacobi_eigen(m.transpose() * m);
  const Vec3 va = eig.vectors.col(2);
  const Vec3 vb = eig.vectors.col(1);
  const Vec3 ua_raw = m * va;
  const Vec3 ub_raw = m * vb;
  if (!(ua_raw.norm() > 1e-12) || !(ub_raw.norm() > 1e-12))
    throw DegenerateError("essential_candidates: E has rank below 2");
  const Vec3 ua = ua_raw.normalized();
  const Vec3 ub = (ub_raw - ub_raw.dot(ua) * ua).normalized();

  Mat3 u, v;
  u << ua, ub, ua.cross(ub);
  v << va, vb, va.cross(vb);
  Mat3 w;
  w << 0.0, -1.0, 0.0,
       1.0, 0.0, 0.0,
       0.0, 0.0, 1.0;
  const Mat3 r1 = u * w * v.transpose();
  const Mat3 r2 = u * w.transpose() * v.transpose();
  const Vec3 t = u.col(2);
  return {Pose{r1, t}, Pose{r1, -t}, Pose{r2, t}, Pose{r2, -t}};
}

bool in_front_of_both(const Pose& pose, const Vec3& x1, const Vec3& x2) {
  // Rays in camera-1 frame: λ1·d1 and c2 + λ2·d2.
  const Vec3 c2 = -pose.R.transpose() * pose.t;
  const Vec3 d1 = x1;
  const Vec3 d2 = pose.R.transpose() * x2;
  const double a = d1.dot(d1), b = d1.dot(d2), c = d2.dot(d2);
  const double det = a * c - b * b;
  if (!(std::abs(det) > 1e-14 * a * c)) return false;
  const double r1 = d1.dot(c2), r2 = d2.dot(c2);
  // [a −b; −b c][λ1 λ2]ᵀ = [r1, −r2]ᵀ
  const double l1 = (c * r1 - b * r2) / det;
  const double l2 = (b * r1 - a * r2) / det;
  const Vec3 mid = 0.5 * (l1 * d1 + c2 + l2 * d2);
  const Vec3 in2 = pose.R * mid + pose.t;
  return mid.z() > 0.0 && in2.z() > 0.0;
}

Pose decompose_essential(const EssentialMatrix& e, const CorrespondenceSet& corrs,
                         const std::vector<std::uint8_t>* mask) {
  if (mask && mask->size() != corrs.size())
    throw DimensionError("decompose_essential: mask length differs from correspondence count");
  const auto candidates = essential_candidates(e);
  std::array<std::size_t, 4> votes{};
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const Vec3 x1 = corrs.x1(i), x2 = corrs.x2(i);
    for (std::size_t c = 0; c < 4; ++c) votes[c] += in_front_of_both(candidates[c], x1, x2);
  }
  const auto best = std::max_element(votes.begin(), votes.end());
  if (*best == 0) throw DegenerateError("decompose_essential: no candidate passes cheirality");
  return candidates[static_cast<std::size_t>(best - votes.begin())];
}

AngularErrors pose_angular_errors(const Pose& gt, const Pose& pred) {
  constexpr double kDeg = 180.0 / std::numbers::pi;
  const double cos_r = std::clamp(((gt.R.transpose() * pred.R).trace() - 1.0) / 2.0, -1.0, 1.0);
  const double tn = gt.t.norm() * pred.t.norm();
  const double cos_t = tn > 0.0 ? std::clamp(std::abs(gt.t.dot(pred.t)) / tn, 0.0, 1.0) : 0.0;
  return {std::acos(cos_r) * kDeg, std::acos(cos_t) * kDeg};
}

}  // namespace fnnet::geometry
