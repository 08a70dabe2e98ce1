#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace fnnet::pipeline {

// Percentage of pairs whose error is strictly below `threshold_deg`.
double accuracy_below(std::span<const double> pair_errors_deg, double threshold_deg);

// Mean of the accuracies at 1°, 2°, 3°, 4°, 5°, in percent. A pair's error is
// max(rotation error, translation error). Empty input gives 0.
double map5(std::span<const double> pair_errors_deg);

// Micro-averaged confusion counts over correspondences.
struct ConfusionCounts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_negative = 0;

  void add(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);
  ConfusionCounts& operator+=(const ConfusionCounts& o);
};

// Precision, recall and F-score, all in percent. F = 2PR/(P+R), 0 when P+R = 0.
struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};
PrecisionRecall precision_recall(const ConfusionCounts& c);

}  // namespace fnnet::pipeline
