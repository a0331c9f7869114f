// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segrobust/tensor.hpp"

#include <cstdint>

namespace segrobust {

/// Adam with bias correction. Minimizes; pass a negated gradient to ascend.
struct AdamState {
  AdamState(const Shape& shape, double learning_rate);

  std::int64_t step = 0;
  Tensor first_moment;
  Tensor second_moment;
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

Tensor adam_step(AdamState& state, const Tensor& params, const Tensor& grad);

/// velocity <- momentum * velocity + grad + weight_decay * params
/// params   <- params - lr * velocity
struct SgdMomentumState {
  SgdMomentumState(const Shape& shape, double learning_rate, double momentum_coef = 0.9,
                   double weight_decay_coef = 0.0);

  Tensor velocity;
  double lr;
  double momentum;
  double weight_decay;
};

Tensor sgd_momentum_step(SgdMomentumState& state, const Tensor& params, const Tensor& grad);

}  // namespace segrobust
