#include "fnnet/model/loss.hpp"

#include <cmath>

#include "fnnet/error.hpp"

namespace fnnet::model {

Var balanced_bce(Var logits, std::span<const std::uint8_t> labels) {
  const Tensor& z = logits.value();
  if (z.size() != labels.size())
    throw DimensionError("balanced_bce: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(z.size()) + " logits");
  std::size_t pos = 0;
  for (auto l : labels) pos += l != 0;
  const std::size_t neg = labels.size() - pos;
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (pos == 0 || neg == 0)
      w[i] = 1.0 / static_cast<double>(labels.size());
    else
      w[i] = 0.5 / static_cast<double>(labels[i] ? pos : neg);
  }

  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double x = z[i];
    const double y = labels[i] ? 1.0 : 0.0;
    loss += w[i] * (std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x))));
  }
  std::vector<double> y(labels.begin(), labels.end());
  return logits.graph().record("balanced_bce", Tensor::scalar(loss), {logits},
                               [logits, w = std::move(w), y = std::move(y)](Graph& g, const Tensor&,
                                                                            const Tensor& gy) {
                                 const Tensor& z = g.value(logits);
                                 Tensor& gz = g.grad(logits);
                                 for (std::size_t i = 0; i < y.size(); ++i) {
                                   const double s = 1.0 / (1.0 + std::exp(-z[i]));
                                   gz[i] += gy[0] * w[i] * (s - y[i]);
                                 }
                               });
}

Var essential_loss(Var e_hat, const geometry::Vec9& e_gt) {
  const Tensor& e = e_hat.value();
  if (e.size() != 9) throw DimensionError("essential_loss: expected a 9-vector");
  double dm = 0.0, dp = 0.0;
  for (int i = 0; i < 9; ++i) {
    dm += (e[i] - e_gt[i]) * (e[i] - e_gt[i]);
    dp += (e[i] + e_gt[i]) * (e[i] + e_gt[i]);
  }
  const double sign = dm <= dp ? -1.0 : 1.0;  // ê + sign·e is the closer difference
  return e_hat.graph().record("essential_loss", Tensor::scalar(std::min(dm, dp)), {e_hat},
                              [e_hat, e_gt, sign](Graph& g, const Tensor&, const Tensor& gy) {
                                const Tensor& e = g.value(e_hat);
                                Tensor& ge = g.grad(e_hat);
                                for (int i = 0; i < 9; ++i) ge[i] += gy[0] * 2.0 * (e[i] + sign * e_gt[i]);
                              });
}

double essential_alpha(const FNNetConfig& config, std::size_t epoch) {
  return epoch < config.alpha_warmup_epochs ? 0.0 : config.loss_alpha;
}

LossTerms fnnet_loss(const ForwardResult& fwd, std::span<const std::uint8_t> labels,
                     const geometry::EssentialMatrix& e_gt, std::size_t epoch, const FNNetConfig& config) {
  LossTerms out;
  Var cls = balanced_bce(fwd.logits, labels);
  out.classification = cls.value().item();
  out.total = cls;

  const double alpha = essential_alpha(config, epoch);
  if (alpha > 0.0) {
    if (fwd.essential && !fwd.prediction.degenerate) {
      Var ess = essential_loss(*fwd.essential, e_gt.vector());
      out.essential = ess.value().item();
      out.total = diff::add(cls, diff::scale(ess, alpha));
    } else {
      out.essential_masked = true;
    }
  }
  return out;
}

}  // namespace fnnet::model
