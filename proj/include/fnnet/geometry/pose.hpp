#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "fnnet/geometry/types.hpp"

namespace fnnet::geometry {

Mat3 rotation_from_axis_angle(const Vec3& axis, double angle_rad);

// The four (R, t̂) factorizations of E; t̂ has unit norm.
std::array<Pose, 4> essential_candidates(const EssentialMatrix& e);

// Midpoint triangulation of one correspondence under `pose`; true when the
// midpoint lies in front of both cameras.
bool in_front_of_both(const Pose& pose, const Vec3& x1, const Vec3& x2);

/// Recovers the relative pose from E by cheirality voting over the
/// correspondences (only those with mask[i] != 0 when a mask is given).
/// Throws DegenerateError if no candidate places any point in front of both cameras.
Pose decompose_essential(const EssentialMatrix& e, const CorrespondenceSet& corrs,
                         const std::vector<std::uint8_t>* mask = nullptr);

struct AngularErrors {
  double rotation_deg = 0.0;
  double translation_deg = 0.0;

  double max() const { return rotation_deg > translation_deg ? rotation_deg : translation_deg; }
};

// Rotation angle of R_gtᵀR_pred, and the sign-free angle between translations.
AngularErrors pose_angular_errors(const Pose& gt, const Pose& pred);

}  // namespace fnnet::geometry
