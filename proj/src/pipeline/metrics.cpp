#include "fnnet/pipeline/metrics.hpp"

#include "fnnet/error.hpp"

namespace fnnet::pipeline {

double accuracy_below(std::span<const double> errors, double threshold_deg) {
  if (errors.empty()) return 0.0;
  std::size_t hits = 0;
  for (double e : errors) hits += e < threshold_deg;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(errors.size());
}

double map5(std::span<const double> errors) {
  double sum = 0.0;
  for (int t = 1; t <= 5; ++t) sum += accuracy_below(errors, static_cast<double>(t));
  return sum / 5.0;
}

void ConfusionCounts::add(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) throw DimensionError("confusion counts: prediction/label length mismatch");
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0, t = truth[i] != 0;
    if (p && t) ++true_positive;
    else if (p) ++false_positive;
    else if (t) ++false_negative;
    else ++true_negative;
  }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  true_positive += o.true_positive;
  false_positive += o.false_positive;
  false_negative += o.false_negative;
  true_negative += o.true_negative;
  return *this;
}

PrecisionRecall precision_recall(const ConfusionCounts& c) {
  PrecisionRecall r;
  const auto tp = static_cast<double>(c.true_positive);
  if (c.true_positive + c.false_positive > 0) r.precision = 100.0 * tp / static_cast<double>(c.true_positive + c.false_positive);
  if (c.true_positive + c.false_negative > 0) r.recall = 100.0 * tp / static_cast<double>(c.true_positive + c.false_negative);
  if (r.precision + r.recall > 0.0) r.f_score = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

}  // namespace fnnet::pipeline
