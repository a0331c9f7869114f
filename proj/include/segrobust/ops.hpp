// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segrobust/tensor.hpp"

#include <cstddef>

// Forward and backward kernels of the primitive set. Spatial tensors are
// channels-last (H, W, C); convolution weights are (K, K, Cin, Cout).
// Kernels are pure: they never record anything; graph.hpp wraps them.
namespace segrobust::ops {

inline constexpr double kLogFloor = 1e-12;

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, ConvGeometry geom);
Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& weight, const Shape& input_shape,
                         ConvGeometry geom);
Tensor conv2d_grad_weight(const Tensor& grad_out, const Tensor& input, const Shape& weight_shape,
                          ConvGeometry geom);
Tensor conv2d_grad_bias(const Tensor& grad_out);

Tensor relu(const Tensor& x);
Tensor relu_grad(const Tensor& grad_out, const Tensor& x);

Tensor upsample_nearest(const Tensor& x, std::size_t factor);
Tensor upsample_nearest_grad(const Tensor& grad_out, std::size_t factor);

Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Slice channels [begin, begin + count) of an (H, W, C) tensor.
Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count);

/// Softmax over the last axis.
Tensor softmax_channels(const Tensor& logits);
Tensor softmax_channels_grad(const Tensor& grad_out, const Tensor& probs);

/// Natural log with the input clamped from below at kLogFloor.
Tensor log_clamped(const Tensor& x);
Tensor log_clamped_grad(const Tensor& grad_out, const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor shift(const Tensor& x, double offset);

Tensor dot(const Tensor& a, const Tensor& b);
Tensor l2_norm(const Tensor& x);

Tensor sign(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);
/// Elementwise clamp into [lo_i, hi_i].
Tensor clamp(const Tensor& x, const Tensor& lo, const Tensor& hi);

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace segrobust::ops
