// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/optim.hpp"

#include "segrobust/error.hpp"
#include "segrobust/ops.hpp"

#include <cmath>

namespace segrobust {

AdamState::AdamState(const Shape& shape, double learning_rate)
    : first_moment(shape), second_moment(shape), lr(learning_rate) {}

Tensor adam_step(AdamState& state, const Tensor& params, const Tensor& grad) {
  ops::require_same_shape(params, grad, "adam_step");
  ops::require_same_shape(params, state.first_moment, "adam_step");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  Tensor out(params.shape());
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grad[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    out[i] = params[i] - state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
  return out;
}

SgdMomentumState::SgdMomentumState(const Shape& shape, double learning_rate, double momentum_coef,
                                   double weight_decay_coef)
    : velocity(shape), lr(learning_rate), momentum(momentum_coef), weight_decay(weight_decay_coef) {}

Tensor sgd_momentum_step(SgdMomentumState& state, const Tensor& params, const Tensor& grad) {
  ops::require_same_shape(params, grad, "sgd_momentum_step");
  ops::require_same_shape(params, state.velocity, "sgd_momentum_step");
  Tensor out(params.shape());
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& v = state.velocity[i];
    v = state.momentum * v + grad[i] + state.weight_decay * params[i];
    out[i] = params[i] - state.lr * v;
  }
  return out;
}

}  // namespace segrobust
