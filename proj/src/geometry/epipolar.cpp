#include "fnnet/geometry/epipolar.hpp"

#include <cmath>
#include <string>

#include "fnnet/error.hpp"

namespace fnnet::geometry {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw ContractError("camera intrinsics need positive focal lengths, got fx=" + std::to_string(fx) +
                        " fy=" + std::to_string(fy));
}

void Pose::validate_rotation() const {
  if (!((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-9) ||
      !(std::abs(R.determinant() - 1.0) <= 1e-9))
    throw ContractError("pose rotation is not orthonormal with det +1");
}

EssentialMatrix::EssentialMatrix(const Mat3& e) {
  const double n = e.norm();
  if (!(n > 1e-300) || !std::isfinite(n)) throw DegenerateError("essential matrix has zero or non-finite norm");
  e_ = e / n;
}

Vec9 EssentialMatrix::vector() const {
  Vec9 v;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) v[3 * r + c] = e_(r, c);
  return v;
}

EssentialMatrix EssentialMatrix::from_vector(const Vec9& v) {
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v[3 * r + c];
  return EssentialMatrix(m);
}

CorrespondenceSet CorrespondenceSet::subset(const std::vector<std::uint8_t>& mask) const {
  if (mask.size() != points.size()) throw DimensionError("subset: mask length differs from correspondence count");
  CorrespondenceSet out;
  if (labels) out.labels.emplace();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!mask[i]) continue;
    out.points.push_back(points[i]);
    if (labels) out.labels->push_back((*labels)[i]);
  }
  return out;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

EssentialMatrix essential_from_pose(const Pose& pose) {
  if (!(pose.t.norm() > 1e-12)) throw DegenerateError("essential_from_pose: translation is (near) zero");
  return EssentialMatrix(skew(pose.t) * pose.R);
}

CorrespondenceSet normalize_points(std::span<const Correspondence> pixels, const CameraIntrinsics& k1,
                                   const CameraIntrinsics& k2) {
  k1.validate();
  k2.validate();
  CorrespondenceSet out;
  out.points.reserve(pixels.size());
  for (const auto& p : pixels)
    out.points.push_back({(p[0] - k1.cx) / k1.fx, (p[1] - k1.cy) / k1.fy, (p[2] - k2.cx) / k2.fx,
                          (p[3] - k2.cy) / k2.fy});
  return out;
}

std::vector<Correspondence> denormalize_points(const CorrespondenceSet& corrs, const CameraIntrinsics& k1,
                                               const CameraIntrinsics& k2) {
  std::vector<Correspondence> out;
  out.reserve(corrs.size());
  for (const auto& p : corrs.points)
    out.push_back({p[0] * k1.fx + k1.cx, p[1] * k1.fy + k1.cy, p[2] * k2.fx + k2.cx, p[3] * k2.fy + k2.cy});
  return out;
}

double symmetric_epipolar_distance(const Correspondence& c, const Mat3& e) {
  const Vec3 x1(c[0], c[1], 1.0);
  const Vec3 x2(c[2], c[3], 1.0);
  const Vec3 l2 = e * x1;              // line in image 2
  const Vec3 l1 = e.transpose() * x2;  // line in image 1
  const double n2 = l2.x() * l2.x() + l2.y() * l2.y();
  const double n1 = l1.x() * l1.x() + l1.y() * l1.y();
  if (!(n1 > 0.0) || !(n2 > 0.0)) return kDegenerateDistance;
  const double r = x2.dot(l2);
  const double d = r * r * (1.0 / n2 + 1.0 / n1);
  return std::isfinite(d) ? d : kDegenerateDistance;
}

double symmetric_epipolar_distance(const Vec2& x1, const Vec2& x2, const EssentialMatrix& e) {
  return symmetric_epipolar_distance(Correspondence{x1.x(), x1.y(), x2.x(), x2.y()}, e.matrix());
}

std::vector<std::uint8_t> classify_by_epipolar(const CorrespondenceSet& corrs, const EssentialMatrix& e,
                                               double tau) {
  if (!(tau > 0.0)) throw ContractError("classify_by_epipolar: threshold must be positive");
  std::vector<std::uint8_t> labels(corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i)
    labels[i] = symmetric_epipolar_distance(corrs.points[i], e.matrix()) < tau ? 1 : 0;
  return labels;
}

}  // namespace fnnet::geometry
