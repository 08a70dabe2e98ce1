#pragma once

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fnnet/diffcore/graph.hpp"
#include "fnnet/diffcore/ops.hpp"
#include "fnnet/geometry/types.hpp"
#include "fnnet/model/config.hpp"

namespace fnnet::model {

using diff::Graph;
using diff::Mode;
using diff::Parameter;
using diff::Tensor;
using diff::Var;

// 1x1 convolution weights.
struct Linear {
  Parameter w;
  Parameter b;

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out);
  Var operator()(Graph& g, Var x);
};

// Residual block f + B2(B1(f)), Bi = ReLU(BN(CN(linear(·)))).
struct PointCNBlock {
  Linear l1, l2;
  diff::BatchNorm bn1, bn2;

  PointCNBlock() = default;
  PointCNBlock(const std::string& name, std::size_t channels);
};

// PointCN block, channel-adaptive soft threshold, PointCN block.
struct FNBlock {
  PointCNBlock pre;
  Linear fc1, fc2;
  diff::BatchNorm bn;
  PointCNBlock post;

  FNBlock() = default;
  FNBlock(const std::string& name, std::size_t channels);
};

// Soft assignment of N points to M clusters (pool) and back (unpool).
struct DiffPool {
  Linear assign;
};
struct DiffUnpool {
  Linear assign;
};

Var pointcn_block(Graph& g, Var f, PointCNBlock& block, Mode mode);

// Intermediate values of one filtering-noise block, exposed for tests.
struct FNBlockTrace {
  Var g;          // after the first PointCN block
  Var f_c;        // mean |g| per channel
  Var threshold;  // t_s
  Var filtered;   // soft_threshold(g, t_s)
  Var out;
};
FNBlockTrace fn_block_traced(Graph& g, Var f, FNBlock& block, diff::SoftThresholdKind kind, Mode mode);
Var fn_block(Graph& g, Var f, FNBlock& block, diff::SoftThresholdKind kind, Mode mode);

Var diff_pool(Graph& g, Var f, DiffPool& pool);
Var diff_unpool(Graph& g, Var f_orig, Var f_clustered, DiffUnpool& unpool);

// Network outputs for one correspondence set.
struct PredictionOutput {
  std::vector<double> logits;
  std::vector<double> weights;  // relu(tanh(logits)) ∈ [0,1)
  geometry::EssentialMatrix essential;
  bool degenerate = false;  // E came from the uniform-weight fallback

  std::vector<std::uint8_t> positives() const;  // weight > 0
};

struct ForwardResult {
  Var logits;   // 1×N
  Var weights;  // 1×N
  std::optional<Var> essential;  // 9-vector on the tape, when requested and solvable
  PredictionOutput prediction;
};

/// FN-Net: lift → PointCN blocks → diff-pool → filtering-noise blocks on the
/// clusters → diff-unpool, concatenated with the pre-pool features and
/// projected back → PointCN blocks → per-point logit.
class FNNet {
 public:
  explicit FNNet(FNNetConfig config);

  const FNNetConfig& config() const noexcept { return config_; }

  // `corrs` must stay alive until backward() on `g` has run.
  ForwardResult forward(Graph& g, const geometry::CorrespondenceSet& corrs, Mode mode,
                        bool differentiable_essential = false);

  // Eval-mode inference without a gradient tape. Safe to call concurrently.
  PredictionOutput predict(const geometry::CorrespondenceSet& corrs) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  // Batch-norm running statistics by name.
  std::vector<std::pair<std::string, Tensor*>> buffers();
  std::vector<std::pair<std::string, const Tensor*>> buffers() const;

  void zero_grad();

  // Direct access for tests and ablations.
  std::vector<FNBlock>& fn_blocks() { return fn_blocks_; }
  std::vector<PointCNBlock>& pre_blocks() { return pre_; }

 private:
  FNNetConfig config_;
  Linear lift_;
  std::vector<PointCNBlock> pre_;
  DiffPool pool_;
  std::vector<FNBlock> fn_blocks_;
  std::vector<PointCNBlock> plain_cluster_;  // used instead of fn_blocks_ when filter_noise is off
  DiffUnpool unpool_;
  Linear merge_;
  std::vector<PointCNBlock> post_;
  Linear head_;

  void initialize();
};

// 4×N input tensor from [x1,y1,x2,y2] rows.
Tensor correspondence_tensor(const geometry::CorrespondenceSet& corrs);

}  // namespace fnnet::model
