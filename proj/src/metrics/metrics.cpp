// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/metrics.hpp"

#include "segrobust/error.hpp"
#include "segrobust/ops.hpp"

#include <numeric>
#include <vector>

namespace segrobust::metrics {

namespace {

void check_probs(const Tensor& probs, const LabelMask& mask, const char* op) {
  if (probs.rank() != 3 || probs.dim(0) != mask.height || probs.dim(1) != mask.width) {
    throw ShapeError(std::string(op) + ": probabilities " + shape_str(probs.shape()) + " do not match mask (" +
                     std::to_string(mask.height) + ", " + std::to_string(mask.width) + ")");
  }
}

}  // namespace

Tensor one_hot(const LabelMask& mask, std::size_t classes) {
  Tensor t({mask.height, mask.width, classes});
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const std::uint8_t l = mask[i];
    if (l == kVoidLabel) continue;
    if (l >= classes) throw ShapeError("label " + std::to_string(l) + " exceeds class count");
    t[i * classes + l] = 1.0;
  }
  return t;
}

double cross_entropy(const Tensor& probs, const LabelMask& mask) {
  check_probs(probs, mask, "cross_entropy");
  const Tensor y = one_hot(mask, probs.dim(2));
  const double pixels = static_cast<double>(mask.height * mask.width);
  return ops::scale(ops::sum(ops::mul(y, ops::log_clamped(probs))), -1.0 / pixels).item();
}

Var cross_entropy(Var probs, const Tensor& one_hot) {
  const Tensor& p = probs.value();
  if (p.shape() != one_hot.shape()) {
    throw ShapeError("cross_entropy: " + shape_str(p.shape()) + " vs one-hot " + shape_str(one_hot.shape()));
  }
  const double pixels = static_cast<double>(p.dim(0) * p.dim(1));
  Var y = probs.graph()->constant(one_hot);
  return scale(sum(mul(y, log_clamped(probs))), -1.0 / pixels);
}

double cos_sim(const Tensor& u, const Tensor& v) {
  const Tensor den = ops::shift(ops::mul(ops::l2_norm(u), ops::l2_norm(v)), kCosineGuard);
  return ops::div(ops::dot(u, v), den).item();
}

Var cos_sim(Var u, Var v) { return div(dot(u, v), shift(mul(l2_norm(u), l2_norm(v)), kCosineGuard)); }

LabelMask predict(const Tensor& probs) {
  if (probs.rank() != 3) throw ShapeError("predict: expected (H, W, C), got " + shape_str(probs.shape()));
  const std::size_t c = probs.dim(2);
  LabelMask out(probs.dim(0), probs.dim(1));
  for (std::size_t p = 0; p < out.size(); ++p) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < c; ++k) {
      if (probs[p * c + k] > probs[p * c + best]) best = k;
    }
    out[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

double pixel_error(const Tensor& probs, const LabelMask& mask) {
  check_probs(probs, mask, "pixel_error");
  const LabelMask pred = predict(probs);
  std::size_t valid = 0, wrong = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == kVoidLabel) continue;
    ++valid;
    if (pred[i] != mask[i]) ++wrong;
  }
  if (valid == 0) throw Error("pixel_error: every pixel is void");
  return static_cast<double>(wrong) / static_cast<double>(valid);
}

double agreement(const Tensor& probs, const LabelMask& target) { return 1.0 - pixel_error(probs, target); }

double miou(const LabelMask& pred, const LabelMask& mask) {
  if (pred.height != mask.height || pred.width != mask.width) throw ShapeError("miou: mask shapes differ");
  std::vector<std::size_t> inter, uni;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const std::uint8_t t = mask[i];
    if (t == kVoidLabel) continue;
    ++valid;
    const std::uint8_t p = pred[i];
    const std::size_t need = std::max<std::size_t>(t, p) + 1;
    if (inter.size() < need) {
      inter.resize(need, 0);
      uni.resize(need, 0);
    }
    if (p == t) {
      ++inter[t];
      ++uni[t];
    } else {
      ++uni[t];
      ++uni[p];
    }
  }
  if (valid == 0) throw Error("miou: every pixel is void");
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t k = 0; k < uni.size(); ++k) {
    if (uni[k] == 0) continue;
    total += static_cast<double>(inter[k]) / static_cast<double>(uni[k]);
    ++present;
  }
  return total / static_cast<double>(present);
}

double miou(const Tensor& probs, const LabelMask& mask) {
  check_probs(probs, mask, "miou");
  return miou(predict(probs), mask);
}

double dataset_miou(std::span<const double> per_example) {
  if (per_example.empty()) throw Error("dataset_miou of no examples");
  return std::accumulate(per_example.begin(), per_example.end(), 0.0) / static_cast<double>(per_example.size());
}

}  // namespace segrobust::metrics
