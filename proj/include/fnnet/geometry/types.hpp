#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

namespace fnnet::geometry {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

struct CameraIntrinsics {
  double fx = 600.0;
  double fy = 600.0;
  double cx = 320.0;
  double cy = 320.0;

  void validate() const;
  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

// Camera-2 relative to camera-1: X2 = R·X1 + t.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::UnitZ();

  // Throws ContractError unless R is a rotation within 1e-9.
  void validate_rotation() const;
};

// 3x3 essential matrix with unit Frobenius norm. E and −E describe the same geometry.
class EssentialMatrix {
 public:
  EssentialMatrix() = default;
  // Rescales to unit norm; throws DegenerateError on a (near) zero matrix.
  explicit EssentialMatrix(const Mat3& e);

  const Mat3& matrix() const noexcept { return e_; }
  // Row-major 9-vector.
  Vec9 vector() const;
  static EssentialMatrix from_vector(const Vec9& v);

 private:
  Mat3 e_ = Mat3::Zero();
};

// [x1, y1, x2, y2] of one match.
using Correspondence = std::array<double, 4>;

// Putative matches, in camera-normalized coordinates unless stated otherwise.
struct CorrespondenceSet {
  std::vector<Correspondence> points;
  std::optional<std::vector<std::uint8_t>> labels;

  std::size_t size() const noexcept { return points.size(); }
  Vec3 x1(std::size_t i) const { return {points[i][0], points[i][1], 1.0}; }
  Vec3 x2(std::size_t i) const { return {points[i][2], points[i][3], 1.0}; }

  CorrespondenceSet subset(const std::vector<std::uint8_t>& mask) const;
};

}  // namespace fnnet::geometry
