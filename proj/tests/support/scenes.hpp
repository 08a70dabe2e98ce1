#pragma once

// Minimal two-view scene builder, independent of the datagen module, used as
// a geometric oracle in tests.

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "fnnet/geometry/types.hpp"

namespace fnnet::testing {

struct SyntheticView {
  geometry::Pose pose;
  geometry::CorrespondenceSet corrs;  // normalized, exact projections
};

inline geometry::Mat3 random_rotation(std::mt19937_64& rng, double max_angle_rad) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, max_angle_rad);
  const Eigen::Vector3d axis = Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
  return Eigen::AngleAxisd(u(rng), axis).toRotationMatrix();
}

// Points in front of camera 1 at depths [4, 12], projected into both views.
// Rejection keeps only points with positive depth in view 2.
inline SyntheticView synthetic_view(std::uint64_t seed, std::size_t n_points) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> depth(4.0, 12.0), lateral(-0.5, 0.5);
  SyntheticView v;
  v.pose.R = random_rotation(rng, 0.5);
  v.pose.t = Eigen::Vector3d(n(rng), n(rng), 0.3 * n(rng)).normalized();
  while (v.corrs.points.size() < n_points) {
    const double z = depth(rng);
    const Eigen::Vector3d p1(lateral(rng) * z, lateral(rng) * z, z);
    const Eigen::Vector3d p2 = v.pose.R * p1 + v.pose.t;
    if (p2.z() < 0.5) continue;
    v.corrs.points.push_back({p1.x() / p1.z(), p1.y() / p1.z(), p2.x() / p2.z(), p2.y() / p2.z()});
  }
  return v;
}

}  // namespace fnnet::testing
