// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segrobust/ops.hpp"
#include "segrobust/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace segrobust {

class Graph;

/// Handle to a value recorded on a Graph. Cheap to copy; valid while the
/// graph lives.
class Var {
 public:
  Var() = default;

  Graph* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }
  const Tensor& value() const;
  bool requires_grad() const;

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

struct BackwardContext {
  std::span<const Tensor* const> inputs;
  const Tensor& output;
  const Tensor& grad_output;
  std::span<const std::uint8_t> needs_grad;
  /// One slot per input; fill the slots whose needs_grad flag is set.
  std::span<Tensor> input_grads;
};

/// Tape of primitive operations (reverse-mode). Single owner; not
/// thread-safe. Nodes are kept in recording order and backward() walks
/// them in exact reverse.
class Graph {
 public:
  using BackwardFn = std::function<void(const BackwardContext&)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that receives a gradient.
  Var leaf(Tensor value);
  /// Leaf excluded from differentiation.
  Var constant(Tensor value);

  /// Append an op node. Throws NumericalError when `value` is not finite.
  Var record(const char* op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

  /// Gradients of a scalar `root` with respect to each of `wrt`. Consumes
  /// the graph: nothing may be recorded or differentiated afterwards.
  std::vector<Tensor> backward(Var root, std::span<const Var> wrt);
  std::vector<Tensor> backward(Var root, std::initializer_list<Var> wrt);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  const std::string& op_name(std::size_t id) const { return nodes_.at(id).op; }

 private:
  struct Node {
    std::string op;
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
  };

  void check_open() const;
  Var push(Node node);

  std::deque<Node> nodes_;
  bool consumed_ = false;
};

// Differentiable wrappers; each evaluates the matching ops:: kernel and
// records a node when any input requires a gradient.
Var conv2d(Var input, Var weight, Var bias, ops::ConvGeometry geom);
Var relu(Var x);
Var upsample_nearest(Var x, std::size_t factor);
Var concat_channels(Var a, Var b);
Var softmax_channels(Var logits);
Var log_clamped(Var x);
Var sum(Var x);
Var mean(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var x, double factor);
Var shift(Var x, double offset);
Var dot(Var a, Var b);
Var l2_norm(Var x);
Var sign(Var x);
Var clamp(Var x, double lo, double hi);

}  // namespace segrobust
