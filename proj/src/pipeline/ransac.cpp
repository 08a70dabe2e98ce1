#include "fnnet/pipeline/ransac.hpp"

#include <numeric>
#include <random>

#include "fnnet/error.hpp"
#include "fnnet/geometry/eight_point.hpp"

namespace fnnet::pipeline {

void RansacConfig::validate() const {
  if (iterations < 1) throw ContractError("ransac: iterations must be >= 1");
  if (!(inlier_threshold > 0.0)) throw ContractError("ransac: inlier threshold must be > 0");
}

RansacResult ransac_essential(const geometry::CorrespondenceSet& corrs, const RansacConfig& config) {
  config.validate();
  const std::size_t n = corrs.size();
  if (n < 8) throw ContractError("ransac: need at least 8 correspondences, got " + std::to_string(n));

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<double> sample_weights(n, 0.0);
  std::vector<std::uint8_t> mask(n);

  RansacResult best;
  bool have_model = false;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    // Partial Fisher-Yates: the first 8 entries become a uniform sample.
    for (std::size_t k = 0; k < 8; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(idx[k], idx[pick(rng)]);
    }
    geometry::CorrespondenceSet sample;
    sample.points.reserve(8);
    for (std::size_t k = 0; k < 8; ++k) sample.points.push_back(corrs.points[idx[k]]);

    geometry::EightPointResult hyp;
    try {
      hyp = geometry::eight_point(sample);
    } catch (const DegenerateError&) {
      continue;
    }
    std::size_t count = 0;
    const geometry::Mat3& e = hyp.essential.matrix();
    for (std::size_t i = 0; i < n; ++i) {
      mask[i] = geometry::symmetric_epipolar_distance(corrs.points[i], e) < config.inlier_threshold ? 1 : 0;
      count += mask[i];
    }
    if (!have_model || count > best.inlier_count) {
      best.essential = hyp.essential;
      best.inliers = mask;
      best.inlier_count = count;
      have_model = true;
    }
  }

  if (!have_model) {
    best.inliers.assign(n, 0);
    try {
      best.essential = geometry::eight_point(corrs).essential;
    } catch (const DegenerateError&) {
      best.essential = geometry::EssentialMatrix(geometry::Mat3::Identity());
    }
    return best;
  }

  best.success = best.inlier_count >= 8;
  if (best.success) {
    for (std::size_t i = 0; i < n; ++i) sample_weights[i] = best.inliers[i] ? 1.0 : 0.0;
    try {
      best.essential = geometry::weighted_eight_point(corrs, sample_weights).essential;
    } catch (const DegenerateError&) {
      // keep the minimal-sample model
    }
  }
  return best;
}

}  // namespace fnnet::pipeline
