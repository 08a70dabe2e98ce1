#pragma once

#include <cstdint>
#include <span>

#include "fnnet/model/fnnet.hpp"

namespace fnnet::model {

// Binary cross-entropy on logits with per-class weights ∝ 1/(class count):
// the mean of the positive-class mean and the negative-class mean. Falls back
// to a plain mean when a class is absent.
Var balanced_bce(Var logits, std::span<const std::uint8_t> labels);

// min(‖ê − e‖², ‖ê + e‖²) for unit 9-vectors; sign-ambiguity free.
Var essential_loss(Var e_hat, const geometry::Vec9& e_gt);

// Weight of the essential term at `epoch` (0 during warm-up).
double essential_alpha(const FNNetConfig& config, std::size_t epoch);

struct LossTerms {
  Var total;
  double classification = 0.0;
  double essential = 0.0;       // unweighted; 0 when masked or unused
  bool essential_masked = false;  // degenerate eigengap or too few positive weights
};

// L = L_cls + α(epoch)·L_ess. Call forward() with differentiable_essential
// set whenever α(epoch) > 0.
LossTerms fnnet_loss(const ForwardResult& fwd, std::span<const std::uint8_t> labels,
                     const geometry::EssentialMatrix& e_gt, std::size_t epoch, const FNNetConfig& config);

}  // namespace fnnet::model
