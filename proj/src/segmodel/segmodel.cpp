// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/segmodel.hpp"

#include "segrobust/error.hpp"
#include "segrobust/ops.hpp"
#include "segrobust/records.hpp"
#include "segrobust/rng.hpp"

#include <cmath>

namespace segrobust {

namespace {

constexpr ops::ConvGeometry kConv3x3{1, 1};
constexpr ops::ConvGeometry kConv3x3Down{2, 1};
constexpr double kInputCenter = 0.5;  // inputs are centered before both convolutions
constexpr ops::ConvGeometry kConv1x1{1, 0};

std::vector<Parameter> zero_params(const ModelGeometry& g) {
  const std::size_t head_in = g.features + 3;
  return {
      {"backbone.conv1.weight", Tensor({3, 3, 3, g.hidden}), true},
      {"backbone.conv1.bias", Tensor({g.hidden}), true},
      {"backbone.conv2.weight", Tensor({3, 3, g.hidden, g.features}), true},
      {"backbone.conv2.bias", Tensor({g.features}), true},
      {"backbone.conv3.weight", Tensor({3, 3, g.features, g.features}), true},
      {"backbone.conv3.bias", Tensor({g.features}), true},
      {"head.conv.weight", Tensor({1, 1, head_in, g.classes}), false},
      {"head.conv.bias", Tensor({g.classes}), false},
  };
}

void validate_geometry(const ModelGeometry& g) {
  if (g.height < 2 || g.width < 2 || g.height % 2 || g.width % 2) {
    throw ShapeError("model height and width must be even and >= 2");
  }
  if (g.classes < 2 || g.features == 0 || g.hidden == 0) throw ShapeError("invalid model geometry");
}

nlohmann::json geometry_json(const ModelGeometry& g) {
  return {{"height", g.height}, {"width", g.width}, {"classes", g.classes}, {"features", g.features},
          {"hidden", g.hidden}};
}

}  // namespace

EvalCounters& EvalCounters::operator+=(const EvalCounters& o) {
  backbone += o.backbone;
  head += o.head;
  head_param_reads += o.head_param_reads;
  feature_terms += o.feature_terms;
  return *this;
}

SegModel::SegModel(ModelGeometry geometry) : geometry_(geometry) {
  validate_geometry(geometry_);
  params_ = zero_params(geometry_);
}

SegModel SegModel::init(ModelGeometry geometry, std::uint64_t seed) {
  SegModel m(geometry);
  Rng rng(derive_seed({seed, 0x1417}));
  for (Parameter& p : m.params_) {
    if (p.value.rank() != 4) continue;
    const double fan_in = static_cast<double>(p.value.dim(0) * p.value.dim(1) * p.value.dim(2));
    const double bound = std::sqrt(6.0 / fan_in);
    for (double& v : p.value.data()) v = rng.uniform(-bound, bound);
  }
  return m;
}

std::size_t SegModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

ModelBinding::ModelBinding(Graph& graph, const SegModel& model, bool trainable, EvalCounters* counters)
    : graph_(graph), model_(model), trainable_(trainable), counters_(counters) {}

Var ModelBinding::param(ParamId id) {
  auto& slot = bound_.at(id);
  if (!slot) {
    const Parameter& p = model_.params().at(id);
    if (!p.in_backbone && counters_) ++counters_->head_param_reads;
    slot = trainable_ ? graph_.leaf(p.value) : graph_.constant(p.value);
  }
  return *slot;
}

std::vector<Var> ModelBinding::all_params() {
  if (!trainable_) throw GraphError("all_params() on a constant model binding");
  std::vector<Var> out;
  for (std::size_t i = 0; i < kParamCount; ++i) out.push_back(param(static_cast<ParamId>(i)));
  return out;
}

void check_image(const SegModel& model, const Tensor& image) {
  if (image.shape() != model.geometry().image_shape()) {
    throw ShapeError("image shape " + shape_str(image.shape()) + " does not match model input " +
                     shape_str(model.geometry().image_shape()));
  }
}

Var backbone_forward(ModelBinding& b, Var image) {
  check_image(b.model(), image.value());
  if (b.counters()) ++b.counters()->backbone;
  Var h = relu(conv2d(shift(image, -kInputCenter), b.param(kConv1Weight), b.param(kConv1Bias), kConv3x3));
  h = relu(conv2d(h, b.param(kConv2Weight), b.param(kConv2Bias), kConv3x3Down));
  return relu(conv2d(h, b.param(kConv3Weight), b.param(kConv3Bias), kConv3x3));
}

Var head_forward(ModelBinding& b, Var image, Var features) {
  check_image(b.model(), image.value());
  if (features.value().shape() != b.model().geometry().feature_shape()) {
    throw ShapeError("feature shape " + shape_str(features.value().shape()) + " does not match model");
  }
  if (b.counters()) ++b.counters()->head;
  Var joined = concat_channels(shift(image, -kInputCenter), upsample_nearest(features, 2));
  return softmax_channels(conv2d(joined, b.param(kHeadWeight), b.param(kHeadBias), kConv1x1));
}

Var full_forward(ModelBinding& b, Var image) { return head_forward(b, image, backbone_forward(b, image)); }

Tensor backbone_forward(const SegModel& m, const Tensor& image, EvalCounters* counters) {
  check_image(m, image);
  if (counters) ++counters->backbone;
  Tensor h = ops::relu(ops::conv2d(ops::shift(image, -kInputCenter), m.param(kConv1Weight), m.param(kConv1Bias), kConv3x3));
  h = ops::relu(ops::conv2d(h, m.param(kConv2Weight), m.param(kConv2Bias), kConv3x3Down));
  return ops::relu(ops::conv2d(h, m.param(kConv3Weight), m.param(kConv3Bias), kConv3x3));
}

Tensor head_forward(const SegModel& m, const Tensor& image, const Tensor& features, EvalCounters* counters) {
  check_image(m, image);
  if (features.shape() != m.geometry().feature_shape()) {
    throw ShapeError("feature shape " + shape_str(features.shape()) + " does not match model");
  }
  if (counters) {
    ++counters->head;
    counters->head_param_reads += 2;
  }
  Tensor joined = ops::concat_channels(ops::shift(image, -kInputCenter), ops::upsample_nearest(features, 2));
  Tensor probs = ops::softmax_channels(ops::conv2d(joined, m.param(kHeadWeight), m.param(kHeadBias), kConv1x1));
  if (!probs.all_finite()) throw NumericalError("non-finite model output");
  return probs;
}

Tensor full_forward(const SegModel& m, const Tensor& image, EvalCounters* counters) {
  return head_forward(m, image, backbone_forward(m, image, counters), counters);
}

void save_checkpoint(const SegModel& model, const std::filesystem::path& path, const nlohmann::json& metadata) {
  nlohmann::json meta = {{"geometry", geometry_json(model.geometry())}, {"metadata", metadata}};
  std::vector<records::Record> recs;
  recs.push_back(records::from_json_text("meta", meta.dump()));
  for (const Parameter& p : model.params()) recs.push_back(records::from_tensor(p.name, p.value));
  records::write_file(path, kCheckpointVersion, recs);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto recs = records::read_file(path, kCheckpointVersion);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(records::to_json_text(records::find(recs, "meta")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed checkpoint metadata: " + e.what());
  }
  ModelGeometry g;
  try {
    const auto& jg = meta.at("geometry");
    g.height = jg.at("height");
    g.width = jg.at("width");
    g.classes = jg.at("classes");
    g.features = jg.at("features");
    g.hidden = jg.at("hidden");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": checkpoint geometry: " + e.what());
  }
  Checkpoint ck{SegModel(g), meta.value("metadata", nlohmann::json::object())};
  for (Parameter& p : ck.model.params()) {
    Tensor t = records::to_tensor(records::find(recs, p.name));
    if (t.shape() != p.value.shape()) {
      throw FormatError(path.string() + ": parameter " + p.name + " has shape " + shape_str(t.shape()));
    }
    p.value = std::move(t);
  }
  return ck;
}

}  // namespace segrobust
