#include "fnnet/pipeline/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <numeric>

#include "fnnet/error.hpp"
#include "fnnet/geometry/pose.hpp"
#include "fnnet/pipeline/metrics.hpp"

namespace fnnet::pipeline {

namespace {

constexpr double kFailureErrorDeg = 180.0;

struct PairOutcome {
  PairResult result;
  ConfusionCounts counts;
};

PairOutcome evaluate_pair(const datagen::DatasetRecord& rec, const Predictor& predictor, const EvalOptions& opt) {
  PairOutcome out;
  out.result.pair_id = rec.pair_id;
  const geometry::CorrespondenceSet corrs = rec.normalized();
  const std::uint64_t seed = pair_seed(opt.ransac.seed, rec.pair_id);

  Prediction pred = predictor(corrs, seed);
  if (pred.positives.size() != corrs.size()) throw DimensionError("predictor returned a mask of the wrong length");
  out.counts.add(pred.positives, rec.labels);

  geometry::EssentialMatrix e = pred.essential;
  std::vector<std::uint8_t> support = pred.positives;
  if (opt.ransac_post) {
    const std::size_t n_pos = std::accumulate(pred.positives.begin(), pred.positives.end(), std::size_t{0});
    if (n_pos >= 8) {
      const geometry::CorrespondenceSet subset = corrs.subset(pred.positives);
      RansacConfig rc = opt.ransac;
      rc.seed = seed;
      const RansacResult rr = ransac_essential(subset, rc);
      e = rr.essential;
      // Map the subset inlier mask back onto the full set.
      support.assign(corrs.size(), 0);
      for (std::size_t i = 0, k = 0; i < corrs.size(); ++i)
        if (pred.positives[i]) support[i] = rr.inliers[k++];
    }
  }

  const bool any_support = std::find(support.begin(), support.end(), std::uint8_t{1}) != support.end();
  try {
    const geometry::Pose pose = geometry::decompose_essential(e, corrs, any_support ? &support : nullptr);
    const geometry::AngularErrors err = geometry::pose_angular_errors(rec.pose(), pose);
    out.result.err_r_deg = err.rotation_deg;
    out.result.err_t_deg = err.translation_deg;
  } catch (const DegenerateError&) {
    out.result.err_r_deg = kFailureErrorDeg;
    out.result.err_t_deg = kFailureErrorDeg;
  }
  return out;
}

}  // namespace

std::uint64_t pair_seed(std::uint64_t base, const std::string& pair_id) {
  // FNV-1a over the id, then mixed with the base seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : pair_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = h ^ (base + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

EvalReport evaluate(const std::vector<datagen::DatasetRecord>& dataset, const Predictor& predictor,
                    const EvalOptions& options) {
  if (dataset.empty()) throw ContractError("evaluate: dataset is empty");
  options.ransac.validate();

  std::vector<PairOutcome> outcomes(dataset.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::ptrdiff_t>(dataset.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      outcomes[static_cast<std::size_t>(i)] = evaluate_pair(dataset[static_cast<std::size_t>(i)], predictor, options);
    } catch (...) {
#pragma omp critical(fnnet_eval_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  EvalReport report;
  ConfusionCounts total;
  std::vector<double> errors;
  errors.reserve(outcomes.size());
  for (auto& o : outcomes) {
    total += o.counts;
    errors.push_back(std::max(o.result.err_r_deg, o.result.err_t_deg));
    report.pairs.push_back(std::move(o.result));
  }
  report.map5 = map5(errors);
  const PrecisionRecall pr = precision_recall(total);
  report.precision = pr.precision;
  report.recall = pr.recall;
  report.f_score = pr.f_score;
  report.config = {{"ransac_post", options.ransac_post},
                   {"ransac_iterations", options.ransac.iterations},
                   {"inlier_threshold", options.ransac.inlier_threshold},
                   {"seed", options.ransac.seed}};
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json jp = nlohmann::json::array();
  for (const auto& p : pairs) jp.push_back({{"pair_id", p.pair_id}, {"err_r_deg", p.err_r_deg}, {"err_t_deg", p.err_t_deg}});
  return {{"map5", map5}, {"precision", precision}, {"recall", recall}, {"f_score", f_score},
          {"config", config}, {"pairs", std::move(jp)}};
}

std::string EvalReport::summary() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "pairs=%zu map5=%.2f precision=%.2f recall=%.2f f_score=%.2f", pairs.size(), map5,
                precision, recall, f_score);
  return buf;
}

Predictor fnnet_predictor(const model::FNNet& net) {
  return [&net](const geometry::CorrespondenceSet& corrs, std::uint64_t) {
    model::PredictionOutput out = net.predict(corrs);
    return Prediction{out.essential, out.positives()};
  };
}

Predictor ransac_predictor(const RansacConfig& config) {
  return [config](const geometry::CorrespondenceSet& corrs, std::uint64_t seed) {
    RansacConfig rc = config;
    rc.seed = seed;
    RansacResult r = ransac_essential(corrs, rc);
    return Prediction{r.essential, std::move(r.inliers)};
  };
}

}  // namespace fnnet::pipeline
