#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fnnet/diffcore/tensor.hpp"

namespace fnnet::diff {

// A trainable tensor together with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

class Graph;

// Handle to a node recorded on a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Ops append nodes in evaluation order, so reverse
// insertion order is a valid topological order for backward().
//
// A Graph built with record_grad=false only evaluates; no closures are kept.
// One graph belongs to one thread.
class Graph {
 public:
  // Receives the node's forward value and the gradient flowing into it.
  using BackwardFn = std::function<void(Graph&, const Tensor& out, const Tensor& out_grad)>;

  explicit Graph(bool record_grad = true) : record_(record_grad) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const noexcept { return record_; }

  Var constant(Tensor value);
  Var param(Parameter& p);

  // Appends an op output. Throws NumericalError naming `op` if `value` is not finite.
  // `fn` is dropped when no input needs a gradient.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  // Gradient buffer of `v`, zero-allocated on first use. Only call for nodes
  // that require a gradient.
  Tensor& grad(Var v);

  // Seeds d(loss)/d(loss) = 1 and propagates to every reachable Parameter,
  // accumulating into Parameter::grad. A graph can be backpropagated once.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad{};
    bool has_grad = false;
    bool requires_grad = false;
    std::string_view op;
    BackwardFn backward{};
    std::vector<std::size_t> inputs{};
    Parameter* param = nullptr;
  };

  bool record_;
  bool consumed_ = false;
  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return graph_->value(*this); }
inline bool Var::requires_grad() const { return graph_->requires_grad(*this); }

}  // namespace fnnet::diff
