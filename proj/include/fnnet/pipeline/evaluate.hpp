#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fnnet/datagen/scene.hpp"
#include "fnnet/geometry/types.hpp"
#include "fnnet/model/fnnet.hpp"
#include "fnnet/pipeline/ransac.hpp"

namespace fnnet::pipeline {

// What a correspondence filter reports for one pair.
struct Prediction {
  geometry::EssentialMatrix essential;
  std::vector<std::uint8_t> positives;  // predicted inliers
};

// Called with the normalized correspondences and a per-pair seed derived
// from the pair id. Must be safe to call concurrently.
using Predictor = std::function<Prediction(const geometry::CorrespondenceSet&, std::uint64_t seed)>;

struct PairResult {
  std::string pair_id;
  double err_r_deg = 0.0;
  double err_t_deg = 0.0;
};

struct EvalReport {
  double map5 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  std::vector<PairResult> pairs;  // dataset order
  nlohmann::json config = nlohmann::json::object();

  nlohmann::json to_json() const;
  std::string summary() const;
};

struct EvalOptions {
  bool ransac_post = false;
  RansacConfig ransac{};  // its seed is mixed with each pair id
};

// Seed used for pair `pair_id` given a base seed. Independent of dataset order.
std::uint64_t pair_seed(std::uint64_t base, const std::string& pair_id);

/// Runs `predictor` on every record, optionally re-estimates E with RANSAC
/// restricted to the predicted positives, recovers the pose and scores it.
/// A pair whose pose cannot be recovered scores 180° on both errors.
/// Records are processed in parallel; results are merged in dataset order.
EvalReport evaluate(const std::vector<datagen::DatasetRecord>& dataset, const Predictor& predictor,
                    const EvalOptions& options = {});

Predictor fnnet_predictor(const model::FNNet& net);
Predictor ransac_predictor(const RansacConfig& config);

}  // namespace fnnet::pipeline
