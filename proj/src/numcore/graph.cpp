// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/graph.hpp"

#include "segrobust/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace segrobust {

const Tensor& Var::value() const {
  if (!graph_) throw GraphError("value() on an unbound Var");
  return graph_->value(id_);
}

bool Var::requires_grad() const { return graph_ && graph_->requires_grad(id_); }

void Graph::check_open() const {
  if (consumed_) throw GraphError("graph already consumed by backward()");
}

Var Graph::push(Node node) {
  check_open();
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::leaf(Tensor value) {
  if (!value.all_finite()) throw NumericalError("non-finite leaf value");
  Node n;
  n.op = "leaf";
  n.value = std::move(value);
  n.requires_grad = true;
  n.is_leaf = true;
  return push(std::move(n));
}

Var Graph::constant(Tensor value) {
  if (!value.all_finite()) throw NumericalError("non-finite constant value");
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  n.is_leaf = true;
  return push(std::move(n));
}

Var Graph::record(const char* op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  check_open();
  if (!value.all_finite()) throw NumericalError(std::string("non-finite result in ") + op);
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.graph() != this) throw GraphError(std::string(op) + ": input belongs to a different graph");
    n.inputs.push_back(in.id());
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

std::vector<Tensor> Graph::backward(Var root, std::initializer_list<Var> wrt) {
  return backward(root, std::span<const Var>(wrt.begin(), wrt.size()));
}

std::vector<Tensor> Graph::backward(Var root, std::span<const Var> wrt) {
  check_open();
  if (nodes_.empty()) throw GraphError("backward on an empty graph");
  if (root.graph() != this) throw GraphError("backward: root belongs to a different graph");
  const Node& r = nodes_[root.id()];
  if (r.value.size() != 1) throw GraphError("backward: root must be scalar, got shape " + shape_str(r.value.shape()));
  for (const Var& v : wrt) {
    if (v.graph() != this) throw GraphError("backward: requested variable belongs to a different graph");
    if (!nodes_[v.id()].requires_grad) throw GraphError("backward: requested variable is detached");
  }

  std::vector<Tensor> grads(nodes_.size());
  grads[root.id()] = Tensor(r.value.shape(), 1.0);

  std::vector<const Tensor*> in_values;
  std::vector<std::uint8_t> needs;
  std::vector<Tensor> in_grads;
  for (std::size_t id = root.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.is_leaf || !n.requires_grad || grads[id].empty()) continue;
    const std::size_t k = n.inputs.size();
    in_values.assign(k, nullptr);
    needs.assign(k, 0);
    in_grads.assign(k, Tensor());
    for (std::size_t i = 0; i < k; ++i) {
      in_values[i] = &nodes_[n.inputs[i]].value;
      needs[i] = nodes_[n.inputs[i]].requires_grad ? 1 : 0;
    }
    BackwardContext ctx{std::span<const Tensor* const>(in_values.data(), k), n.value, grads[id],
                        std::span<const std::uint8_t>(needs.data(), k), std::span<Tensor>(in_grads.data(), k)};
    n.backward(ctx);
    for (std::size_t i = 0; i < k; ++i) {
      if (!needs[i]) continue;
      Tensor& slot = grads[n.inputs[i]];
      Tensor& g = in_grads[i];
      if (g.empty()) continue;
      if (g.shape() != nodes_[n.inputs[i]].value.shape()) {
        throw GraphError(n.op + ": backward produced gradient of shape " + shape_str(g.shape()));
      }
      if (slot.empty()) {
        slot = std::move(g);
      } else {
        for (std::size_t j = 0; j < slot.size(); ++j) slot[j] += g[j];
      }
    }
    grads[id] = Tensor();
  }

  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (const Var& v : wrt) {
    Tensor& g = grads[v.id()];
    out.push_back(g.empty() ? Tensor(nodes_[v.id()].value.shape()) : g);
  }
  consumed_ = true;
  return out;
}

namespace {

Graph& graph_of(Var v) {
  if (!v.valid()) throw GraphError("operation on an unbound Var");
  return *v.graph();
}

}  // namespace

Var conv2d(Var input, Var weight, Var bias, ops::ConvGeometry geom) {
  Tensor out = ops::conv2d(input.value(), weight.value(), bias.value(), geom);
  return graph_of(input).record("conv2d", std::move(out), {input, weight, bias}, [geom](const BackwardContext& c) {
    const Tensor& x = *c.inputs[0];
    const Tensor& w = *c.inputs[1];
    if (c.needs_grad[0]) c.input_grads[0] = ops::conv2d_grad_input(c.grad_output, w, x.shape(), geom);
    if (c.needs_grad[1]) c.input_grads[1] = ops::conv2d_grad_weight(c.grad_output, x, w.shape(), geom);
    if (c.needs_grad[2]) c.input_grads[2] = ops::conv2d_grad_bias(c.grad_output);
  });
}

Var relu(Var x) {
  return graph_of(x).record("relu", ops::relu(x.value()), {x}, [](const BackwardContext& c) {
    c.input_grads[0] = ops::relu_grad(c.grad_output, *c.inputs[0]);
  });
}

Var upsample_nearest(Var x, std::size_t factor) {
  return graph_of(x).record("upsample_nearest", ops::upsample_nearest(x.value(), factor), {x},
                            [factor](const BackwardContext& c) {
                              c.input_grads[0] = ops::upsample_nearest_grad(c.grad_output, factor);
                            });
}

Var concat_channels(Var a, Var b) {
  return graph_of(a).record("concat_channels", ops::concat_channels(a.value(), b.value()), {a, b},
                            [](const BackwardContext& c) {
                              const std::size_t ca = c.inputs[0]->dim(2);
                              const std::size_t cb = c.inputs[1]->dim(2);
                              if (c.needs_grad[0]) c.input_grads[0] = ops::slice_channels(c.grad_output, 0, ca);
                              if (c.needs_grad[1]) c.input_grads[1] = ops::slice_channels(c.grad_output, ca, cb);
                            });
}

Var softmax_channels(Var logits) {
  return graph_of(logits).record("softmax_channels", ops::softmax_channels(logits.value()), {logits},
                                 [](const BackwardContext& c) {
                                   c.input_grads[0] = ops::softmax_channels_grad(c.grad_output, c.output);
                                 });
}

Var log_clamped(Var x) {
  return graph_of(x).record("log_clamped", ops::log_clamped(x.value()), {x}, [](const BackwardContext& c) {
    c.input_grads[0] = ops::log_clamped_grad(c.grad_output, *c.inputs[0]);
  });
}

Var sum(Var x) {
  return graph_of(x).record("sum", ops::sum(x.value()), {x}, [](const BackwardContext& c) {
    c.input_grads[0] = Tensor(c.inputs[0]->shape(), c.grad_output.item());
  });
}

Var mean(Var x) {
  return graph_of(x).record("mean", ops::mean(x.value()), {x}, [](const BackwardContext& c) {
    c.input_grads[0] = Tensor(c.inputs[0]->shape(), c.grad_output.item() / static_cast<double>(c.inputs[0]->size()));
  });
}

Var add(Var a, Var b) {
  return graph_of(a).record("add", ops::add(a.value(), b.value()), {a, b}, [](const BackwardContext& c) {
    if (c.needs_grad[0]) c.input_grads[0] = c.grad_output;
    if (c.needs_grad[1]) c.input_grads[1] = c.grad_output;
  });
}

Var sub(Var a, Var b) {
  return graph_of(a).record("sub", ops::sub(a.value(), b.value()), {a, b}, [](const BackwardContext& c) {
    if (c.needs_grad[0]) c.input_grads[0] = c.grad_output;
    if (c.needs_grad[1]) c.input_grads[1] = ops::scale(c.grad_output, -1.0);
  });
}

Var mul(Var a, Var b) {
  return graph_of(a).record("mul", ops::mul(a.value(), b.value()), {a, b}, [](const BackwardContext& c) {
    if (c.needs_grad[0]) c.input_grads[0] = ops::mul(c.grad_output, *c.inputs[1]);
    if (c.needs_grad[1]) c.input_grads[1] = ops::mul(c.grad_output, *c.inputs[0]);
  });
}

Var div(Var a, Var b) {
  return graph_of(a).record("div", ops::div(a.value(), b.value()), {a, b}, [](const BackwardContext& c) {
    const Tensor& den = *c.inputs[1];
    if (c.needs_grad[0]) c.input_grads[0] = ops::div(c.grad_output, den);
    if (c.needs_grad[1]) {
      Tensor g(den.shape());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = -c.grad_output[i] * c.output[i] / den[i];
      c.input_grads[1] = std::move(g);
    }
  });
}

Var scale(Var x, double factor) {
  return graph_of(x).record("scale", ops::scale(x.value(), factor), {x}, [factor](const BackwardContext& c) {
    c.input_grads[0] = ops::scale(c.grad_output, factor);
  });
}

Var shift(Var x, double offset) {
  return graph_of(x).record("shift", ops::shift(x.value(), offset), {x}, [](const BackwardContext& c) {
    c.input_grads[0] = c.grad_output;
  });
}

Var dot(Var a, Var b) {
  return graph_of(a).record("dot", ops::dot(a.value(), b.value()), {a, b}, [](const BackwardContext& c) {
    const double g = c.grad_output.item();
    if (c.needs_grad[0]) c.input_grads[0] = ops::scale(*c.inputs[1], g);
    if (c.needs_grad[1]) c.input_grads[1] = ops::scale(*c.inputs[0], g);
  });
}

Var l2_norm(Var x) {
  return graph_of(x).record("l2_norm", ops::l2_norm(x.value()), {x}, [](const BackwardContext& c) {
    const double n = c.output.item();
    // Subgradient 0 at the origin.
    c.input_grads[0] = n > 0.0 ? ops::scale(*c.inputs[0], c.grad_output.item() / n) : Tensor(c.inputs[0]->shape());
  });
}

Var sign(Var x) {
  return graph_of(x).record("sign", ops::sign(x.value()), {x}, [](const BackwardContext& c) {
    c.input_grads[0] = Tensor(c.inputs[0]->shape());
  });
}

Var clamp(Var x, double lo, double hi) {
  return graph_of(x).record("clamp", ops::clamp(x.value(), lo, hi), {x}, [lo, hi](const BackwardContext& c) {
    const Tensor& in = *c.inputs[0];
    Tensor g(in.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (in[i] > lo && in[i] < hi) ? c.grad_output[i] : 0.0;
    c.input_grads[0] = std::move(g);
  });
}

}  // namespace segrobust
