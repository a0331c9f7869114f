// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segrobust/graph.hpp"
#include "segrobust/tensor.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace segrobust {

struct ModelGeometry {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t classes = 4;
  /// Channels of the backbone output (the attacked representation).
  std::size_t features = 16;
  /// Channels of the first backbone convolution.
  std::size_t hidden = 8;

  /// Backbone output is (height / 2, width / 2, features).
  Shape feature_shape() const { return {height / 2, width / 2, features}; }
  Shape image_shape() const { return {height, width, 3}; }
  Shape output_shape() const { return {height, width, classes}; }
  bool operator==(const ModelGeometry&) const = default;
};

/// Evaluation counts, accumulated by the forward functions when a sink is
/// passed. Counting per call keeps concurrent readers of one model apart.
struct EvalCounters {
  std::uint64_t backbone = 0;
  std::uint64_t head = 0;
  std::uint64_t head_param_reads = 0;
  /// Cosine-similarity terms on backbone features evaluated by an attack.
  std::uint64_t feature_terms = 0;

  EvalCounters& operator+=(const EvalCounters& o);
  bool operator==(const EvalCounters&) const = default;
};

enum ParamId : std::size_t {
  kConv1Weight,
  kConv1Bias,
  kConv2Weight,
  kConv2Bias,
  kConv3Weight,
  kConv3Bias,
  kHeadWeight,
  kHeadBias,
  kParamCount
};

struct Parameter {
  std::string name;
  Tensor value;
  bool in_backbone = true;
};

/// Backbone: conv3x3(3->hidden) relu, conv3x3 stride 2 (hidden->features)
/// relu, conv3x3(features->features) relu. Head: nearest upsample x2, concat
/// with the input image, 1x1 conv to class logits, channel softmax.
class SegModel {
 public:
  SegModel() = default;
  /// All parameters zero.
  explicit SegModel(ModelGeometry geometry);

  /// Uniform He (fan-in) initialization, zero biases.
  static SegModel init(ModelGeometry geometry, std::uint64_t seed);

  const ModelGeometry& geometry() const { return geometry_; }
  const std::vector<Parameter>& params() const { return params_; }
  std::vector<Parameter>& params() { return params_; }
  const Tensor& param(ParamId id) const { return params_.at(id).value; }
  Tensor& param(ParamId id) { return params_.at(id).value; }
  std::size_t parameter_count() const;

 private:
  ModelGeometry geometry_;
  std::vector<Parameter> params_;
};

/// Binds model parameters into a graph on first use, as differentiable
/// leaves (trainable) or constants.
class ModelBinding {
 public:
  ModelBinding(Graph& graph, const SegModel& model, bool trainable, EvalCounters* counters = nullptr);

  Graph& graph() { return graph_; }
  const SegModel& model() const { return model_; }
  EvalCounters* counters() const { return counters_; }
  Var param(ParamId id);
  /// Leaves of all parameters, binding any not yet used. Trainable only.
  std::vector<Var> all_params();

 private:
  Graph& graph_;
  const SegModel& model_;
  bool trainable_;
  EvalCounters* counters_;
  std::array<std::optional<Var>, kParamCount> bound_;
};

Var backbone_forward(ModelBinding& binding, Var image);
Var head_forward(ModelBinding& binding, Var image, Var features);
Var full_forward(ModelBinding& binding, Var image);

Tensor backbone_forward(const SegModel& model, const Tensor& image, EvalCounters* counters = nullptr);
Tensor head_forward(const SegModel& model, const Tensor& image, const Tensor& features,
                    EvalCounters* counters = nullptr);
/// Per-pixel class probabilities (H, W, C).
Tensor full_forward(const SegModel& model, const Tensor& image, EvalCounters* counters = nullptr);

void check_image(const SegModel& model, const Tensor& image);

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  SegModel model;
  nlohmann::json metadata;
};

void save_checkpoint(const SegModel& model, const std::filesystem::path& path,
                     const nlohmann::json& metadata = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace segrobust
