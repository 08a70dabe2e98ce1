#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fnnet/geometry/epipolar.hpp"
#include "fnnet/geometry/types.hpp"

namespace fnnet::pipeline {

struct RansacConfig {
  std::size_t iterations = 1000;
  double inlier_threshold = geometry::kInlierThreshold;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RansacResult {
  geometry::EssentialMatrix essential;
  std::vector<std::uint8_t> inliers;  // mask of the best hypothesis
  std::size_t inlier_count = 0;
  bool success = false;  // false when no hypothesis reached 8 inliers
};

/// Hypothesize-and-verify over minimal 8-point samples scored by symmetric
/// epipolar distance; the best consensus set is refit with the weighted
/// eight-point solver using 0/1 weights. Deterministic per seed.
/// Throws ContractError for fewer than 8 correspondences.
RansacResult ransac_essential(const geometry::CorrespondenceSet& corrs, const RansacConfig& config);

}  // namespace fnnet::pipeline
