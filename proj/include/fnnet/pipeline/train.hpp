#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fnnet/datagen/scene.hpp"
#include "fnnet/model/fnnet.hpp"
#include "fnnet/pipeline/evaluate.hpp"

namespace fnnet::pipeline {

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_classification_loss = 0.0;
  double mean_essential_loss = 0.0;  // over records where the term was active
  double val_f_score = 0.0;          // percent
  double val_map5 = 0.0;             // percent

  // Fixed-format line, identical across runs with the same inputs.
  std::string line() const;
};

struct TrainOptions {
  std::size_t epochs = 20;
  // Written after every epoch (and once before the first). Empty disables checkpoints.
  std::filesystem::path checkpoint;
  EvalOptions validation{.ransac_post = true};
  // Global gradient-norm clip per step; 0 disables clipping.
  double grad_clip_norm = 0.0;
  std::function<void(const std::string&)> log;
};

/// Trains `net` record by record with Adam, shuffling the training set every
/// epoch from the model seed. A non-finite loss or gradient aborts with a
/// NumericalError; the checkpoint file then still holds the last finished epoch.
std::vector<EpochLog> train(model::FNNet& net, const std::vector<datagen::DatasetRecord>& train_set,
                            const std::vector<datagen::DatasetRecord>& val_set, const TrainOptions& options);

}  // namespace fnnet::pipeline
