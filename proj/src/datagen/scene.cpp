#include "fnnet/datagen/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <numeric>
#include <random>

#include "fnnet/error.hpp"
#include "fnnet/geometry/epipolar.hpp"
#include "fnnet/geometry/pose.hpp"

namespace fnnet::datagen {

namespace {

using Rng = std::mt19937_64;

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  for (;;) {
    Vec3 v(n01(rng), n01(rng), n01(rng));
    const double n = v.norm();
    if (n > 1e-9) return v / n;
  }
}

geometry::Vec2 project(const CameraIntrinsics& k, const Vec3& x) {
  return {k.fx * x.x() / x.z() + k.cx, k.fy * x.y() / x.z() + k.cy};
}

bool inside(const SceneConfig& c, const geometry::Vec2& p) {
  return p.x() >= 0.0 && p.x() < c.image_width && p.y() >= 0.0 && p.y() < c.image_height;
}

}  // namespace

void NoiseConfig::validate() const {
  if (n_total < 16) throw ContractError("noise config: n_total must be at least 16");
  if (!(outlier_ratio >= 0.0 && outlier_ratio < 1.0)) throw ContractError("noise config: outlier_ratio must be in [0,1)");
  if (!(drift_fraction >= 0.0 && drift_fraction <= 1.0))
    throw ContractError("noise config: drift_fraction must be in [0,1]");
  if (!(inlier_jitter_px >= 0.0) || !(drift_px >= 0.0)) throw ContractError("noise config: negative pixel noise");
  const auto outliers = static_cast<std::size_t>(std::llround(outlier_ratio * static_cast<double>(n_total)));
  if (n_total - outliers < 8) throw ContractError("noise config: fewer than 8 inliers requested");
}

geometry::CorrespondenceSet DatasetRecord::normalized() const {
  auto set = geometry::normalize_points(corrs, k1, k2);
  set.labels = labels;
  return set;
}

std::size_t DatasetRecord::inlier_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

ScenePair sample_scene(std::uint64_t seed, const SceneConfig& config) {
  config.k1.validate();
  config.k2.validate();
  if (config.n_points == 0) throw ContractError("sample_scene: n_points must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, config.max_rotation_deg * std::numbers::pi / 180.0);
  std::uniform_real_distribution<double> ratio(config.min_baseline_ratio, config.max_baseline_ratio);
  std::uniform_real_distribution<double> px(0.0, config.image_width);
  std::uniform_real_distribution<double> py(0.0, config.image_height);
  std::uniform_real_distribution<double> depth(config.min_depth, config.max_depth);
  const double mean_depth = 0.5 * (config.min_depth + config.max_depth);

  // A pose with too little view overlap is redrawn.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ScenePair scene{config.k1, config.k2, {}, {}, config.image_width, config.image_height};
    const Vec3 axis = random_unit(rng);
    scene.pose.R = geometry::rotation_from_axis_angle(axis, angle(rng));
    scene.pose.t = random_unit(rng) * (ratio(rng) * mean_depth);

    const std::size_t budget = 50 * config.n_points;
    for (std::size_t tries = 0; tries < budget && scene.points3d.size() < config.n_points; ++tries) {
      const double u = px(rng), v = py(rng), z = depth(rng);
      const Vec3 x1(z * (u - config.k1.cx) / config.k1.fx, z * (v - config.k1.cy) / config.k1.fy, z);
      const Vec3 x2 = scene.pose.R * x1 + scene.pose.t;
      if (x2.z() <= 1e-6 || !inside(config, project(config.k2, x2))) continue;
      scene.points3d.push_back(x1);
    }
    if (scene.points3d.size() == config.n_points) return scene;
  }
  throw DegenerateError("sample_scene: could not find a pose with enough shared view");
}

namespace {

DatasetRecord corrupt_once(const ScenePair& scene, const NoiseConfig& noise, std::uint64_t seed, std::string pair_id) {
  const std::size_t n = noise.n_total;
  const auto n_out = static_cast<std::size_t>(std::llround(noise.outlier_ratio * static_cast<double>(n)));
  const auto n_drift = static_cast<std::size_t>(std::llround(noise.drift_fraction * static_cast<double>(n_out)));
  const std::size_t n_in = n - n_out;

  const double w2 = scene.image_width, h2 = scene.image_height;

  Rng rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::normal_distribution<double> drift(noise.drift_px, noise.drift_px / 4.0);
  std::uniform_real_distribution<double> dir(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> ux(0.0, w2), uy(0.0, h2);

  DatasetRecord rec;
  rec.pair_id = std::move(pair_id);
  rec.k1 = scene.k1;
  rec.k2 = scene.k2;
  rec.r = scene.pose.R;
  rec.t = scene.pose.t.normalized();
  rec.corrs.reserve(n);

  const double sigma = noise.inlier_jitter_px;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& x1 = scene.points3d[i % scene.points3d.size()];
    const Vec3 x2 = scene.pose.R * x1 + scene.pose.t;
    geometry::Vec2 p1 = project(scene.k1, x1);
    geometry::Vec2 p2 = project(scene.k2, x2);
    p1 += sigma * geometry::Vec2(jitter(rng), jitter(rng));
    p2 += sigma * geometry::Vec2(jitter(rng), jitter(rng));
    if (i >= n_in && i < n_in + n_drift) {
      const double mag = std::max(drift(rng), 10.0 * sigma);
      const double a = dir(rng);
      p2 += mag * geometry::Vec2(std::cos(a), std::sin(a));
    } else if (i >= n_in + n_drift) {
      p2 = geometry::Vec2(ux(rng), uy(rng));
    }
    rec.corrs.push_back({p1.x(), p1.y(), p2.x(), p2.y()});
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Correspondence> shuffled(n);
  for (std::size_t i = 0; i < n; ++i) shuffled[i] = rec.corrs[order[i]];
  rec.corrs = std::move(shuffled);

  const auto e_gt = geometry::essential_from_pose(rec.pose());
  rec.labels = geometry::classify_by_epipolar(geometry::normalize_points(rec.corrs, rec.k1, rec.k2), e_gt);
  return rec;
}

}  // namespace

DatasetRecord corrupt(const ScenePair& scene, const NoiseConfig& noise, std::string pair_id) {
  noise.validate();
  if (scene.points3d.empty()) throw ContractError("corrupt: scene has no points");
  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    DatasetRecord rec = corrupt_once(scene, noise, noise.seed + attempt * 0x9E3779B97F4A7C15ULL, pair_id);
    if (rec.inlier_count() >= 8) return rec;
  }
  throw DegenerateError("corrupt: fewer than 8 inliers after 10 attempts for " + pair_id);
}

std::string pair_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "pair_%06zu", index);
  return buf;
}

std::uint64_t record_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(std::uint64_t{index} >> 32)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (std::uint64_t{words[0]} << 32) | words[1];
}

std::vector<DatasetRecord> generate_dataset(std::uint64_t seed, std::size_t pairs, const SceneConfig& scene,
                                            const NoiseConfig& noise) {
  noise.validate();
  std::vector<DatasetRecord> records(pairs);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs); ++i) {
    try {
      const auto idx = static_cast<std::size_t>(i);
      const std::uint64_t s = record_seed(seed, idx);
      SceneConfig sc = scene;
      sc.n_points = noise.n_total;
      NoiseConfig nc = noise;
      nc.seed = s ^ 0xD1B54A32D192ED03ULL;
      records[idx] = corrupt(sample_scene(s, sc), nc, pair_id_for(idx));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

}  // namespace fnnet::datagen
