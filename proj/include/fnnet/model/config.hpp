#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

#include "fnnet/diffcore/ops.hpp"

namespace fnnet::model {

struct FNNetConfig {
  std::size_t channels = 32;
  std::size_t n_clusters = 16;
  std::size_t n_blocks_pre = 3;
  std::size_t n_blocks_post = 3;
  std::size_t n_fn_blocks = 2;
  diff::SoftThresholdKind threshold_kind = diff::SoftThresholdKind::kQuadratic;
  // false replaces every filtering-noise block with two plain PointCN blocks.
  bool filter_noise = true;
  double loss_alpha = 0.1;
  std::size_t alpha_warmup_epochs = 2;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

// Field names match the struct; absent keys keep their defaults, unknown keys are rejected.
nlohmann::json to_json(const FNNetConfig& c);
FNNetConfig config_from_json(const nlohmann::json& j);

}  // namespace fnnet::model
