#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fnnet/geometry/types.hpp"

namespace fnnet::datagen {

using geometry::CameraIntrinsics;
using geometry::Correspondence;
using geometry::Pose;
using geometry::Vec3;

struct SceneConfig {
  CameraIntrinsics k1{};
  CameraIntrinsics k2{};
  double image_width = 640.0;
  double image_height = 640.0;
  double max_rotation_deg = 30.0;
  // Baseline length relative to the mean scene depth.
  double min_baseline_ratio = 0.05;
  double max_baseline_ratio = 0.3;
  double min_depth = 4.0;
  double max_depth = 20.0;
  std::size_t n_points = 512;
};

struct ScenePair {
  CameraIntrinsics k1;
  CameraIntrinsics k2;
  Pose pose;                  // camera 2 relative to camera 1
  std::vector<Vec3> points3d; // camera-1 frame, visible in both images
  double image_width = 640.0;
  double image_height = 640.0;
};

// Corruption model: each outlier is an inlier plus a noise component. Drift
// outliers displace the true image-2 match; random outliers re-pair the
// image-1 point with an arbitrary image-2 location.
struct NoiseConfig {
  std::size_t n_total = 512;
  double outlier_ratio = 0.5;
  double inlier_jitter_px = 0.5;
  double drift_fraction = 0.5;
  double drift_px = 30.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// One two-view sample with pixel correspondences and geometric ground-truth labels.
struct DatasetRecord {
  std::string pair_id;
  CameraIntrinsics k1;
  CameraIntrinsics k2;
  geometry::Mat3 r = geometry::Mat3::Identity();
  Vec3 t = Vec3::UnitZ();
  std::vector<Correspondence> corrs;  // pixels
  std::vector<std::uint8_t> labels;

  Pose pose() const { return Pose{r, t}; }
  // Camera-normalized correspondences carrying the stored labels.
  geometry::CorrespondenceSet normalized() const;
  std::size_t inlier_count() const;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

/// Random scene: rotation about a uniform axis by an angle uniform in
/// [0, max_rotation_deg], translation in a uniform direction with length
/// ratio·mean_depth, and points uniform over image-1 pixels and depth that
/// also project inside image 2. Deterministic per seed.
ScenePair sample_scene(std::uint64_t seed, const SceneConfig& config);

/// Builds a labeled record from `scene`. Labels come from the symmetric
/// epipolar distance under the true E at 1e-4, never from the corruption
/// bookkeeping. Retries with a perturbed seed (10 attempts) if fewer than 8
/// inliers survive, then throws DegenerateError.
DatasetRecord corrupt(const ScenePair& scene, const NoiseConfig& noise, std::string pair_id = "pair");

std::string pair_id_for(std::size_t index);

// Seed for record `index` of a dataset generated from `seed`.
std::uint64_t record_seed(std::uint64_t seed, std::size_t index);

// `pairs` records; record i depends only on (seed, i), so generation runs in
// parallel and still matches serial output.
std::vector<DatasetRecord> generate_dataset(std::uint64_t seed, std::size_t pairs, const SceneConfig& scene,
                                            const NoiseConfig& noise);

}  // namespace fnnet::datagen
