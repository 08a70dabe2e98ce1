#include "fnnet/diffcore/graph.hpp"

#include "fnnet/error.hpp"

namespace fnnet::diff {

Var Graph::constant(Tensor value) {
  if (!value.all_finite()) throw NumericalError("constant", "non-finite input tensor");
  nodes_.push_back(Node{.value = std::move(value), .op = "constant"});
  return Var(this, nodes_.size() - 1);
}

Var Graph::param(Parameter& p) {
  if (!p.value.all_finite()) throw NumericalError(p.name, "non-finite parameter value");
  if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
  nodes_.push_back(Node{.value = p.value, .requires_grad = record_, .op = "param", .param = &p});
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  if (!value.all_finite()) throw NumericalError(std::string(op), "non-finite forward value");
  bool needs = false;
  if (record_)
    for (const Var& v : inputs) needs = needs || nodes_[v.id()].requires_grad;
  Node n{.value = std::move(value), .requires_grad = needs, .op = op};
  if (needs) {
    n.backward = std::move(fn);
    n.inputs.reserve(inputs.size());
    for (const Var& v : inputs) n.inputs.push_back(v.id());
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Tensor& Graph::grad(Var v) {
  Node& n = nodes_[v.id()];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Graph::backward(Var loss) {
  if (consumed_) throw ContractError("backward: graph already backpropagated");
  const Node& root = nodes_[loss.id()];
  if (root.value.size() != 1)
    throw DimensionError("backward: loss must be scalar, got " + shape_string(root.value.shape()));
  if (!root.value.all_finite()) throw NumericalError("backward", "loss is not finite");
  consumed_ = true;
  if (!root.requires_grad) return;

  grad(loss).fill(1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.param) {
      auto g = n.grad.data();
      auto acc = n.param->grad.data();
      for (std::size_t k = 0; k < g.size(); ++k) acc[k] += g[k];
    } else if (n.backward) {
      n.backward(*this, n.value, n.grad);
      for (std::size_t in : n.inputs) {
        const Node& src = nodes_[in];
        if (src.has_grad && !src.grad.all_finite())
          throw NumericalError(std::string(n.op), "backward produced a non-finite gradient");
      }
    }
    // Free memory early; the graph cannot be replayed anyway.
    n.backward = nullptr;
    n.inputs.clear();
    n.grad = Tensor();
    n.has_grad = false;
  }
}

}  // namespace fnnet::diff
