#include "fnnet/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "fnnet/diffcore/optimizer.hpp"
#include "fnnet/error.hpp"
#include "fnnet/model/checkpoint.hpp"
#include "fnnet/model/loss.hpp"

namespace fnnet::pipeline {

std::string EpochLog::line() const {
  char buf[200];
  std::snprintf(buf, sizeof buf, "epoch %zu l_cls %.6f l_ess %.6f val_f_score %.6f val_map5 %.6f", epoch,
                mean_classification_loss, mean_essential_loss, val_f_score, val_map5);
  return buf;
}

namespace {

void clip_gradients(const std::vector<diff::Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params)
    for (double g : p->grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double s = max_norm / norm;
  for (auto* p : params)
    for (double& g : p->grad.data()) g *= s;
}

}  // namespace

std::vector<EpochLog> train(model::FNNet& net, const std::vector<datagen::DatasetRecord>& train_set,
                            const std::vector<datagen::DatasetRecord>& val_set, const TrainOptions& options) {
  if (train_set.empty()) throw ContractError("train: training set is empty");
  if (val_set.empty()) throw ContractError("train: validation set is empty");
  if (options.grad_clip_norm < 0.0) throw ContractError("train: gradient clip norm must be >= 0");

  const model::FNNetConfig& cfg = net.config();
  // Normalized correspondences are reused every epoch; `forward` keeps a pointer to them.
  std::vector<geometry::CorrespondenceSet> inputs;
  std::vector<geometry::EssentialMatrix> targets;
  inputs.reserve(train_set.size());
  targets.reserve(train_set.size());
  for (const auto& rec : train_set) {
    inputs.push_back(rec.normalized());
    targets.push_back(geometry::essential_from_pose(rec.pose()));
  }

  if (!options.checkpoint.empty()) model::save_checkpoint(net, 0, options.checkpoint);

  diff::Adam adam(diff::AdamConfig{.learning_rate = cfg.learning_rate});
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5851F42D4C957F2DULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::vector<diff::Parameter*> params = net.parameters();

  std::vector<EpochLog> logs;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const bool with_essential = model::essential_alpha(cfg, epoch) > 0.0;
    double cls_sum = 0.0, ess_sum = 0.0;
    std::size_t ess_count = 0;

    for (std::size_t idx : order) {
      diff::Graph g;
      model::ForwardResult fwd = net.forward(g, inputs[idx], diff::Mode::kTrain, with_essential);
      model::LossTerms loss = model::fnnet_loss(fwd, train_set[idx].labels, targets[idx], epoch, cfg);
      if (!std::isfinite(loss.total.value().item()))
        throw NumericalError("train", "non-finite loss at epoch " + std::to_string(epoch + 1));
      net.zero_grad();
      g.backward(loss.total);
      if (options.grad_clip_norm > 0.0) clip_gradients(params, options.grad_clip_norm);
      adam.step(params);
      cls_sum += loss.classification;
      if (with_essential && !loss.essential_masked) {
        ess_sum += loss.essential;
        ++ess_count;
      }
    }

    const EvalReport val = evaluate(val_set, fnnet_predictor(net), options.validation);
    EpochLog log;
    log.epoch = epoch + 1;
    log.mean_classification_loss = cls_sum / static_cast<double>(train_set.size());
    log.mean_essential_loss = ess_count ? ess_sum / static_cast<double>(ess_count) : 0.0;
    log.val_f_score = val.f_score;
    log.val_map5 = val.map5;
    logs.push_back(log);
    if (!options.checkpoint.empty()) model::save_checkpoint(net, epoch + 1, options.checkpoint);
    if (options.log) options.log(log.line());
  }
  return logs;
}

}  // namespace fnnet::pipeline
