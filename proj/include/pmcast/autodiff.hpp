#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "pmcast/params.hpp"
#include "pmcast/tensor.hpp"

namespace pmcast::ad {

enum class OpKind {
  Input,
  Parameter,
  Conv1dCausal,
  WeightNorm,
  Activation,
  Affine,
  Linear,
  Embedding,
  Concat,
  Add,
  Sub,
  Mul,
  Scale,
  AddScalar,
  Abs,
  Sum,
  Mean,
  Select,
  Slice,
  Reshape,
};

std::string_view op_name(OpKind kind);

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  /// Gradient accumulated by backward(); empty if the node needs none.
  std::span<const double> grad() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Append-only tape of operations for reverse-mode differentiation.
///
/// Node ids are insertion indices, so every input precedes its consumer and
/// the reverse insertion order is a valid topological order. Gradients of
/// leaves (requires-grad inputs and parameters) accumulate across backward()
/// calls until zero_grad(); interior gradients are recomputed per call.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  /// With gradients disabled no node requires a gradient and ops keep no
  /// backward closures; used for evaluation.
  explicit Graph(bool grad_enabled) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var input(Tensor value, bool requires_grad = false);
  Var parameter(Parameter& param);

  void backward(Var loss);
  /// Clears gradients of requires-grad inputs. Parameter gradients live in
  /// the Parameter and are cleared there.
  void zero_grad();

  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  OpKind kind(std::size_t id) const { return nodes_.at(id).kind; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::span<const double> grad(std::size_t id) const { return nodes_.at(id).grad; }

  /// Records an op output. Used by op implementations.
  Var record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward);
  /// Mutable gradient buffer of a node, allocated on first use.
  std::span<double> grad_buffer(std::size_t id);
  std::span<const double> out_grad(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    OpKind kind;
    std::vector<std::size_t> inputs;
    Tensor value;
    std::vector<double> grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  // deque: references to node values stay valid while the graph grows.
  std::deque<Node> nodes_;
  bool grad_enabled_ = true;
};

enum class Activation { Relu, Sigmoid, Tanh, Identity };

/// Causal dilated 1-D convolution. input is [C_in, L] or [B, C_in, L],
/// kernel is [C_out, C_in, k]; the input is left-padded with (k-1)*dilation
/// zeros so the output keeps length L and position t sees inputs <= t only.
Var conv1d_causal(Var input, Var kernel, std::size_t dilation);

/// W = (g / ||V||) V per output unit (leading axis of V); g has one entry per
/// output unit.
Var weight_norm(Var direction, Var gain);

Var activation(Var x, Activation kind);
Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);

/// x W^T + b for x of shape [in] or [B, in], W [out, in], b [out].
Var affine(Var x, Var weight, Var bias);
/// x W^T without bias.
Var linear(Var x, Var weight);

/// Row gather: table [V, E], result [n, E].
Var embedding_lookup(Var table, std::span<const int> indices);
/// Gather laid out channels-first for sequence models: codes is row-major
/// [batch, steps], result [batch, E, steps].
Var embed_sequence(Var table, std::span<const int> codes, std::size_t batch, std::size_t steps);

Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var add_scalar(Var x, double offset);
/// |x|; subgradient 0 at x == 0.
Var abs(Var x);
Var sum(Var x);
Var mean(Var x);

/// Picks one index along an axis and drops that axis.
Var select(Var x, std::size_t axis, std::size_t index);
/// Keeps [begin, end) along an axis.
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var x, Shape shape);

}  // namespace pmcast::ad
