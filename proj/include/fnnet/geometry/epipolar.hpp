#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fnnet/geometry/types.hpp"

namespace fnnet::geometry {

// Cross-product matrix: skew(v)·w = v × w.
Mat3 skew(const Vec3& v);

// E = skew(t)·R scaled to unit Frobenius norm. Throws DegenerateError if |t| ≤ 1e-12.
EssentialMatrix essential_from_pose(const Pose& pose);

// Pixel [x1,y1,x2,y2] rows to camera-normalized coordinates, and back.
CorrespondenceSet normalize_points(std::span<const Correspondence> pixels, const CameraIntrinsics& k1,
                                   const CameraIntrinsics& k2);
std::vector<Correspondence> denormalize_points(const CorrespondenceSet& corrs, const CameraIntrinsics& k1,
                                               const CameraIntrinsics& k2);

inline constexpr double kDegenerateDistance = std::numeric_limits<double>::infinity();

// (x̃2ᵀ E x̃1)² · (1/|(E x̃1)_12|² + 1/|(Eᵀ x̃2)_12|²).
// Returns kDegenerateDistance when an epipolar line has a vanishing normal.
double symmetric_epipolar_distance(const Vec2& x1, const Vec2& x2, const EssentialMatrix& e);
double symmetric_epipolar_distance(const Correspondence& c, const Mat3& e);

// Default inlier threshold on normalized coordinates.
inline constexpr double kInlierThreshold = 1e-4;

std::vector<std::uint8_t> classify_by_epipolar(const CorrespondenceSet& corrs, const EssentialMatrix& e,
                                               double tau = kInlierThreshold);

}  // namespace fnnet::geometry
