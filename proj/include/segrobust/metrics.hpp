// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segrobust/graph.hpp"
#include "segrobust/synthdata.hpp"
#include "segrobust/tensor.hpp"

#include <map>
#include <span>
#include <string>

namespace segrobust::metrics {

inline constexpr double kCosineGuard = 1e-12;

/// Target pixel-error level mu in (0, 1].
struct PixelErrorLevel {
  double mu = 0.99;
};

/// (H, W, C) one-hot encoding of a mask; void pixels are all-zero rows.
Tensor one_hot(const LabelMask& mask, std::size_t classes);

/// -1/(HW) * sum_{h,w,c} y_hwc log p_hwc. Void pixels contribute 0 but stay
/// in the H*W divisor.
double cross_entropy(const Tensor& probs, const LabelMask& mask);
Var cross_entropy(Var probs, const Tensor& one_hot);

/// u.v / (|u| |v| + 1e-12), over the flattened tensors.
double cos_sim(const Tensor& u, const Tensor& v);
Var cos_sim(Var u, Var v);

/// Per-pixel argmax; ties go to the lowest class index.
LabelMask predict(const Tensor& probs);

/// Fraction of non-void pixels whose argmax differs from the mask. Throws
/// when every pixel is void.
double pixel_error(const Tensor& probs, const LabelMask& mask);

/// Fraction of non-void target pixels predicted as the target label.
double agreement(const Tensor& probs, const LabelMask& target);

/// Image-wise mIoU over non-void pixels; classes absent from both truth and
/// prediction are left out of the class mean.
double miou(const Tensor& probs, const LabelMask& mask);
double miou(const LabelMask& prediction, const LabelMask& mask);

/// Mean of per-example scores.
double dataset_miou(std::span<const double> per_example);

struct ScoreRow {
  std::size_t example = 0;
  double clean = 0.0;
  std::map<std::string, double> scores;
};

}  // namespace segrobust::metrics
