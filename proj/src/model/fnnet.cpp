#include "fnnet/model/fnnet.hpp"

#include <algorithm>
#include <cmath>

#include "fnnet/error.hpp"
#include "fnnet/geometry/eight_point.hpp"

namespace fnnet::model {

using diff::Shape;
using kernels::Trans;

Linear::Linear(const std::string& name, std::size_t in, std::size_t out)
    : w(name + ".w", Tensor(Shape{out, in})), b(name + ".b", Tensor(Shape{out})) {}

Var Linear::operator()(Graph& g, Var x) { return diff::linear_map(x, g.param(w), g.param(b)); }

PointCNBlock::PointCNBlock(const std::string& name, std::size_t c)
    : l1(name + ".l1", c, c), l2(name + ".l2", c, c), bn1(name + ".bn1", c), bn2(name + ".bn2", c) {}

FNBlock::FNBlock(const std::string& name, std::size_t c)
    : pre(name + ".pre", c), fc1(name + ".fc1", c, c), fc2(name + ".fc2", c, c), bn(name + ".bn", c),
      post(name + ".post", c) {}

Var pointcn_block(Graph& g, Var f, PointCNBlock& block, Mode mode) {
  if (f.value().rank() != 2 || f.value().rows() != block.l1.w.value.cols())
    throw DimensionError("pointcn_block: input " + diff::shape_string(f.shape()) + " does not match " +
                         std::to_string(block.l1.w.value.cols()) + " channels");
  Var h = diff::relu(diff::batch_norm(diff::context_normalize(block.l1(g, f)), block.bn1, mode, 1));
  h = diff::relu(diff::batch_norm(diff::context_normalize(block.l2(g, h)), block.bn2, mode, 1));
  return diff::add(f, h);
}

FNBlockTrace fn_block_traced(Graph& g, Var f, FNBlock& block, diff::SoftThresholdKind kind, Mode mode) {
  FNBlockTrace tr;
  tr.g = pointcn_block(g, f, block.pre, mode);
  const std::size_t c = tr.g.value().rows();
  tr.f_c = diff::mean_axis(diff::abs(tr.g), 1);
  Var lambda = block.fc1(g, diff::reshape(tr.f_c, Shape{c, 1}));
  lambda = diff::relu(diff::batch_norm(lambda, block.bn, mode, 1));
  lambda = diff::reshape(block.fc2(g, lambda), Shape{c});
  tr.threshold = diff::mul(diff::sigmoid(lambda), tr.f_c);
  tr.filtered = diff::soft_threshold(tr.g, tr.threshold, kind);
  tr.out = pointcn_block(g, tr.filtered, block.post, mode);
  return tr;
}

Var fn_block(Graph& g, Var f, FNBlock& block, diff::SoftThresholdKind kind, Mode mode) {
  return fn_block_traced(g, f, block, kind, mode).out;
}

Var diff_pool(Graph& g, Var f, DiffPool& pool) {
  Var s = diff::softmax_axis(pool.assign(g, f), 1);  // M×N, rows sum to 1
  return diff::matmul(f, s, Trans::kNo, Trans::kYes);  // C×M
}

Var diff_unpool(Graph& g, Var f_orig, Var f_clustered, DiffUnpool& unpool) {
  Var t = diff::softmax_axis(unpool.assign(g, f_orig), 0);  // M×N, columns sum to 1
  return diff::matmul(f_clustered, t);                        // C×N
}

std::vector<std::uint8_t> PredictionOutput::positives() const {
  std::vector<std::uint8_t> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) out[i] = weights[i] > 0.0 ? 1 : 0;
  return out;
}

Tensor correspondence_tensor(const geometry::CorrespondenceSet& corrs) {
  const std::size_t n = corrs.size();
  Tensor x(Shape{4, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < 4; ++k) x(k, i) = corrs.points[i][k];
  return x;
}

FNNet::FNNet(FNNetConfig config) : config_(config) {
  config_.validate();
  const std::size_t c = config_.channels, m = config_.n_clusters;
  lift_ = Linear("lift", 4, c);
  for (std::size_t i = 0; i < config_.n_blocks_pre; ++i) pre_.emplace_back("pre" + std::to_string(i), c);
  pool_.assign = Linear("pool", c, m);
  if (config_.filter_noise) {
    for (std::size_t i = 0; i < config_.n_fn_blocks; ++i) fn_blocks_.emplace_back("fn" + std::to_string(i), c);
  } else {
    for (std::size_t i = 0; i < 2 * config_.n_fn_blocks; ++i)
      plain_cluster_.emplace_back("cluster" + std::to_string(i), c);
  }
  unpool_.assign = Linear("unpool", c, m);
  merge_ = Linear("merge", 2 * c, c);
  for (std::size_t i = 0; i < config_.n_blocks_post; ++i) post_.emplace_back("post" + std::to_string(i), c);
  head_ = Linear("head", c, 1);
  initialize();
}

void FNNet::initialize() {
  std::mt19937_64 rng(config_.seed);
  // Weights and biases share the 1/sqrt(fan_in) bound of their layer.
  auto init_linear = [&rng](Linear& l, bool zero_bias) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.w.value.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& v : l.w.value.data()) v = u(rng);
    for (auto& v : l.b.value.data()) v = zero_bias ? 0.0 : u(rng);
  };
  auto init_block = [&](PointCNBlock& b) {
    init_linear(b.l1, false);
    init_linear(b.l2, false);
  };
  init_linear(lift_, false);
  for (auto& b : pre_) init_block(b);
  init_linear(pool_.assign, false);
  for (auto& b : fn_blocks_) {
    init_block(b.pre);
    init_linear(b.fc1, false);
    init_linear(b.fc2, false);
    init_block(b.post);
  }
  for (auto& b : plain_cluster_) init_block(b);
  init_linear(unpool_.assign, false);
  init_linear(merge_, false);
  for (auto& b : post_) init_block(b);
  init_linear(head_, true);
}

ForwardResult FNNet::forward(Graph& g, const geometry::CorrespondenceSet& corrs, Mode mode,
                             bool differentiable_essential) {
  const std::size_t n = corrs.size();
  if (n < 8) throw ContractError("FNNet::forward: need at least 8 correspondences, got " + std::to_string(n));

  Var x = g.constant(correspondence_tensor(corrs));
  Var f = lift_(g, x);
  for (auto& b : pre_) f = pointcn_block(g, f, b, mode);
  const Var pre_pool = f;

  Var clusters = diff_pool(g, f, pool_);
  for (auto& b : fn_blocks_) clusters = fn_block(g, clusters, b, config_.threshold_kind, mode);
  for (auto& b : plain_cluster_) clusters = pointcn_block(g, clusters, b, mode);

  Var unpooled = diff_unpool(g, pre_pool, clusters, unpool_);
  f = merge_(g, diff::concat_rows(pre_pool, unpooled));
  for (auto& b : post_) f = pointcn_block(g, f, b, mode);

  ForwardResult r;
  r.logits = head_(g, f);
  r.weights = diff::relu(diff::tanh(r.logits));

  PredictionOutput& p = r.prediction;
  const Tensor& lv = r.logits.value();
  const Tensor& wv = r.weights.value();
  p.logits.assign(lv.data().begin(), lv.data().end());
  p.weights.assign(wv.data().begin(), wv.data().end());
  // tanh rounds to exactly 1 for logits above ~19; keep the reported range half-open.
  constexpr double kBelowOne = 0x1.fffffffffffffp-1;
  for (double& w : p.weights) w = std::min(w, kBelowOne);

  std::size_t support = 0;
  for (double w : p.weights) support += w > 0.0;
  bool solved = false;
  if (support >= 8) {
    try {
      if (differentiable_essential) {
        Var e = geometry::weighted_eight_point(diff::reshape(r.weights, Shape{n}), corrs);
        geometry::Vec9 v;
        for (int i = 0; i < 9; ++i) v[i] = e.value()[i];
        p.essential = geometry::EssentialMatrix::from_vector(v);
        r.essential = e;
      } else {
        p.essential = geometry::weighted_eight_point(corrs, p.weights).essential;
      }
      solved = true;
    } catch (const DegenerateError&) {
    }
  }
  if (!solved) {
    p.degenerate = true;
    try {
      p.essential = geometry::eight_point(corrs).essential;
    } catch (const DegenerateError&) {
      p.essential = geometry::EssentialMatrix(geometry::Mat3::Identity());
    }
  }
  return r;
}

PredictionOutput FNNet::predict(const geometry::CorrespondenceSet& corrs) const {
  // Eval mode reads parameters and running statistics without writing them.
  Graph g(false);
  return const_cast<FNNet*>(this)->forward(g, corrs, Mode::kEval, false).prediction;
}

namespace {
void push_linear(std::vector<Parameter*>& out, Linear& l) {
  out.push_back(&l.w);
  out.push_back(&l.b);
}
void push_bn(std::vector<Parameter*>& out, diff::BatchNorm& bn) {
  out.push_back(&bn.gamma);
  out.push_back(&bn.beta);
}
void push_block(std::vector<Parameter*>& out, PointCNBlock& b) {
  push_linear(out, b.l1);
  push_bn(out, b.bn1);
  push_linear(out, b.l2);
  push_bn(out, b.bn2);
}
void push_bn_buffers(std::vector<std::pair<std::string, Tensor*>>& out, diff::BatchNorm& bn) {
  const std::string base = bn.gamma.name.substr(0, bn.gamma.name.size() - std::string(".gamma").size());
  out.emplace_back(base + ".running_mean", &bn.running_mean);
  out.emplace_back(base + ".running_var", &bn.running_var);
}
void push_block_buffers(std::vector<std::pair<std::string, Tensor*>>& out, PointCNBlock& b) {
  push_bn_buffers(out, b.bn1);
  push_bn_buffers(out, b.bn2);
}
}  // namespace

std::vector<Parameter*> FNNet::parameters() {
  std::vector<Parameter*> out;
  push_linear(out, lift_);
  for (auto& b : pre_) push_block(out, b);
  push_linear(out, pool_.assign);
  for (auto& b : fn_blocks_) {
    push_block(out, b.pre);
    push_linear(out, b.fc1);
    push_bn(out, b.bn);
    push_linear(out, b.fc2);
    push_block(out, b.post);
  }
  for (auto& b : plain_cluster_) push_block(out, b);
  push_linear(out, unpool_.assign);
  push_linear(out, merge_);
  for (auto& b : post_) push_block(out, b);
  push_linear(out, head_);
  return out;
}

std::vector<const Parameter*> FNNet::parameters() const {
  auto ps = const_cast<FNNet*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

std::vector<std::pair<std::string, Tensor*>> FNNet::buffers() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto& b : pre_) push_block_buffers(out, b);
  for (auto& b : fn_blocks_) {
    push_block_buffers(out, b.pre);
    push_bn_buffers(out, b.bn);
    push_block_buffers(out, b.post);
  }
  for (auto& b : plain_cluster_) push_block_buffers(out, b);
  for (auto& b : post_) push_block_buffers(out, b);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> FNNet::buffers() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<FNNet*>(this)->buffers()) out.emplace_back(name, t);
  return out;
}

void FNNet::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

}  // namespace fnnet::model
