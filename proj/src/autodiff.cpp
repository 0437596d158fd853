#include "pmcast/autodiff.hpp"

#include "pmcast/errors.hpp"

namespace pmcast::ad {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Input: return "input";
    case OpKind::Parameter: return "parameter";
    case OpKind::Conv1dCausal: return "conv1d_causal";
    case OpKind::WeightNorm: return "weight_norm";
    case OpKind::Activation: return "activation";
    case OpKind::Affine: return "affine";
    case OpKind::Linear: return "linear";
    case OpKind::Embedding: return "embedding";
    case OpKind::Concat: return "concat";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::AddScalar: return "add_scalar";
    case OpKind::Abs: return "abs";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::Select: return "select";
    case OpKind::Slice: return "slice";
    case OpKind::Reshape: return "reshape";
  }
  return "unknown";
}

const Tensor& Var::value() const { return graph_->value(id_); }
std::span<const double> Var::grad() const { return graph_->grad(id_); }

Var Graph::input(Tensor value, bool requires_grad) {
  requires_grad = requires_grad && grad_enabled_;
  Node node{OpKind::Input, {}, std::move(value), {}, requires_grad, nullptr, {}};
  if (requires_grad) node.grad.assign(node.value.size(), 0.0);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Graph::parameter(Parameter& param) {
  nodes_.push_back(Node{OpKind::Parameter, {}, param.value, {}, grad_enabled_, &param, {}});
  return {this, nodes_.size() - 1};
}

Var Graph::record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward) {
  bool needs = false;
  for (auto i : inputs) {
    if (i >= nodes_.size()) throw ContractError("op input refers to a later node");
    needs = needs || nodes_[i].requires_grad;
  }
  Node node{kind, std::move(inputs), std::move(value), {}, needs, nullptr, {}};
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

std::span<double> Graph::grad_buffer(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

void Graph::backward(Var loss) {
  if (&loss.graph() != this) throw ContractError("loss belongs to a different graph");
  const auto root = loss.id();
  if (nodes_[root].value.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_string(nodes_[root].value.shape()));
  }
  for (auto& node : nodes_) {
    if (node.kind == OpKind::Input && node.requires_grad) continue;
    node.grad.clear();
  }
  if (!nodes_[root].requires_grad) return;
  grad_buffer(root)[0] += 1.0;

  for (std::size_t i = root + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, i);
    if (node.param != nullptr) {
      auto& g = node.param->grad;
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += node.grad[j];
    }
  }
}

void Graph::zero_grad() {
  for (auto& node : nodes_) {
    if (node.kind == OpKind::Input && node.requires_grad) {
      std::fill(node.grad.begin(), node.grad.end(), 0.0);
    }
  }
}

}  // namespace pmcast::ad
