#include "fnnet/model/config.hpp"

#include <string>

#include "fnnet/error.hpp"

namespace fnnet::model {

void FNNetConfig::validate() const {
  if (channels < 4) throw ContractError("config: channels must be >= 4");
  if (n_clusters < 2) throw ContractError("config: n_clusters must be >= 2");
  if (n_blocks_pre < 1 || n_blocks_post < 1 || n_fn_blocks < 1)
    throw ContractError("config: block counts must be >= 1");
  if (!(loss_alpha >= 0.0)) throw ContractError("config: loss_alpha must be >= 0");
  if (!(learning_rate > 0.0)) throw ContractError("config: learning_rate must be > 0");
}

nlohmann::json to_json(const FNNetConfig& c) {
  return nlohmann::json{
      {"channels", c.channels},
      {"n_clusters", c.n_clusters},
      {"n_blocks_pre", c.n_blocks_pre},
      {"n_blocks_post", c.n_blocks_post},
      {"n_fn_blocks", c.n_fn_blocks},
      {"threshold_kind", diff::to_string(c.threshold_kind)},
      {"filter_noise", c.filter_noise},
      {"loss_alpha", c.loss_alpha},
      {"alpha_warmup_epochs", c.alpha_warmup_epochs},
      {"learning_rate", c.learning_rate},
      {"seed", c.seed},
  };
}

FNNetConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError(0, "config must be a JSON object");
  FNNetConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "channels") c.channels = v.get<std::size_t>();
      else if (key == "n_clusters") c.n_clusters = v.get<std::size_t>();
      else if (key == "n_blocks_pre") c.n_blocks_pre = v.get<std::size_t>();
      else if (key == "n_blocks_post") c.n_blocks_post = v.get<std::size_t>();
      else if (key == "n_fn_blocks") c.n_fn_blocks = v.get<std::size_t>();
      else if (key == "threshold_kind") c.threshold_kind = diff::soft_threshold_kind_from_string(v.get<std::string>());
      else if (key == "filter_noise") c.filter_noise = v.get<bool>();
      else if (key == "loss_alpha") c.loss_alpha = v.get<double>();
      else if (key == "alpha_warmup_epochs") c.alpha_warmup_epochs = v.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw SchemaError(0, "unknown config field '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(0, std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace fnnet::model
