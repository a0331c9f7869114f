// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/synthdata.hpp"

#include "segrobust/error.hpp"
#include "segrobust/records.hpp"
#include "segrobust/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace segrobust {

namespace {

constexpr double kNoiseAmplitude = 0.05;
constexpr double kTextureAmplitude = 0.03;
constexpr double kColorSpread = 0.08;

struct Shape2d {
  bool disc = false;
  // Rectangle: [y0, y1) x [x0, x1). Disc: center (cy, cx), radius r.
  double y0 = 0, x0 = 0, y1 = 0, x1 = 0;
  double cy = 0, cx = 0, r = 0;
  std::uint8_t cls = 1;
  double ring = 0;

  // Distance outside the shape (0 inside), Chebyshev for rectangles.
  double outside(double y, double x) const {
    if (disc) return std::max(0.0, std::hypot(y - cy, x - cx) - r);
    const double dy = std::max({y0 - y, 0.0, y - (y1 - 1)});
    const double dx = std::max({x0 - x, 0.0, x - (x1 - 1)});
    return std::max(dy, dx);
  }
  bool contains(double y, double x) const { return outside(y, x) == 0.0; }
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

LabeledExample make_example(Rng& rng, const DataSpec& spec) {
  const std::size_t H = spec.height, W = spec.width, C = spec.classes;
  LabeledExample ex{Tensor({H, W, 3}), LabelMask(H, W, 0)};

  std::vector<Shape2d> shapes;
  const std::size_t wanted = 1 + rng.below(3);
  const double min_extent = static_cast<double>(std::min(H, W));
  for (std::size_t attempt = 0; attempt < 64 && shapes.size() < wanted; ++attempt) {
    Shape2d s;
    s.disc = rng.below(2) == 1;
    s.cls = static_cast<std::uint8_t>(1 + rng.below(C - 1));
    double extent;
    if (s.disc) {
      s.r = rng.uniform(0.10, 0.22) * min_extent;
      s.cy = rng.uniform(s.r, H - 1 - s.r);
      s.cx = rng.uniform(s.r, W - 1 - s.r);
      extent = 2 * s.r;
    } else {
      const double h = std::floor(rng.uniform(0.2, 0.45) * H);
      const double w = std::floor(rng.uniform(0.2, 0.45) * W);
      s.y0 = std::floor(rng.uniform(0, H - h));
      s.x0 = std::floor(rng.uniform(0, W - w));
      s.y1 = s.y0 + h;
      s.x1 = s.x0 + w;
      extent = std::min(h, w);
    }
    s.ring = spec.void_fraction > 0 ? std::max(1.0, std::round(spec.void_fraction * extent)) : 0.0;
    // Reject if this shape or its ring touches another shape's ring.
    bool clash = false;
    for (const Shape2d& o : shapes) {
      for (std::size_t y = 0; y < H && !clash; ++y) {
        for (std::size_t x = 0; x < W && !clash; ++x) {
          clash = s.outside(y, x) <= s.ring + 1 && o.outside(y, x) <= o.ring + 1;
        }
      }
      if (clash) break;
    }
    if (!clash) shapes.push_back(s);
  }

  const auto bg = class_color(0, C);
  const double fy = rng.uniform(0.5, 2.5), fx = rng.uniform(0.5, 2.5), phase = rng.uniform(0, 2 * std::numbers::pi);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      std::array<double, 3> base = bg;
      const double texture =
          kTextureAmplitude * std::sin(2 * std::numbers::pi * (fy * y / H + fx * x / W) + phase);
      for (double& v : base) v += texture;
      std::uint8_t label = 0;
      for (const Shape2d& s : shapes) {
        if (s.contains(y, x)) {
          label = s.cls;
          base = class_color(s.cls, C);
          break;
        }
        if (s.ring > 0 && s.outside(y, x) <= s.ring) label = kVoidLabel;
      }
      ex.mask.at(y, x) = label;
      for (std::size_t c = 0; c < 3; ++c) {
        ex.image[(y * W + x) * 3 + c] = clamp01(base[c] + rng.uniform(-kNoiseAmplitude, kNoiseAmplitude));
      }
    }
  }
  return ex;
}

}  // namespace

std::array<double, 3> class_color(std::size_t cls, std::size_t classes) {
  if (cls == 0) return {0.5, 0.5, 0.5};
  const double theta = 2 * std::numbers::pi * static_cast<double>(cls - 1) / static_cast<double>(classes - 1);
  const double third = 2 * std::numbers::pi / 3;
  return {0.5 + kColorSpread * std::cos(theta), 0.5 + kColorSpread * std::cos(theta - third),
          0.5 + kColorSpread * std::cos(theta + third)};
}

Dataset generate(std::uint64_t seed, std::size_t count, const DataSpec& spec, std::string split) {
  if (count < 1) throw ConfigError("dataset count must be at least 1");
  if (spec.classes < 2 || spec.classes > 254) throw ConfigError("class count must be in [2, 254]");
  if (spec.height < 8 || spec.width < 8) throw ConfigError("image extent must be at least 8");
  if (!(spec.void_fraction >= 0.0 && spec.void_fraction <= 0.2)) throw ConfigError("void_fraction must be in [0, 0.2]");
  Dataset ds{std::move(split), seed, spec, {}};
  ds.examples.reserve(count);
  Rng rng(derive_seed({seed, 0xDA7A}));
  for (std::size_t i = 0; i < count; ++i) ds.examples.push_back(make_example(rng, spec));
  return ds;
}

DataSplits generate_splits(std::uint64_t seed, std::size_t train_count, std::size_t val_count,
                           std::size_t test_count, const DataSpec& spec) {
  return {generate(seed, train_count, spec, "train"), generate(seed + 1, val_count, spec, "val"),
          generate(seed + 2, test_count, spec, "test")};
}

std::size_t pick_target(const Dataset& dataset, std::size_t index, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (n < 2) throw ConfigError("pick_target needs at least two examples");
  if (index >= n) throw ConfigError("pick_target: index out of range");
  Rng rng(derive_seed({seed, index, 0x7A67}));
  std::size_t j = rng.below(n - 1);
  return j >= index ? j + 1 : j;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  nlohmann::json meta = {{"split", ds.split},
                         {"seed", ds.seed},
                         {"count", ds.size()},
                         {"height", ds.spec.height},
                         {"width", ds.spec.width},
                         {"classes", ds.spec.classes},
                         {"void_fraction", ds.spec.void_fraction}};
  std::vector<records::Record> recs;
  recs.push_back(records::from_json_text("meta", meta.dump()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& ex = ds.examples[i];
    recs.push_back(records::from_tensor("image/" + std::to_string(i), ex.image));
    recs.push_back(records::from_bytes("mask/" + std::to_string(i), {ex.mask.height, ex.mask.width}, ex.mask.labels));
  }
  records::write_file(path, kDatasetVersion, recs);
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto recs = records::read_file(path, kDatasetVersion);
  Dataset ds;
  std::size_t count = 0;
  try {
    const auto meta = nlohmann::json::parse(records::to_json_text(records::find(recs, "meta")));
    ds.split = meta.at("split");
    ds.seed = meta.at("seed");
    count = meta.at("count");
    ds.spec.height = meta.at("height");
    ds.spec.width = meta.at("width");
    ds.spec.classes = meta.at("classes");
    ds.spec.void_fraction = meta.at("void_fraction");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": dataset metadata: " + e.what());
  }
  for (std::size_t i = 0; i < count; ++i) {
    LabeledExample ex;
    ex.image = records::to_tensor(records::find(recs, "image/" + std::to_string(i)));
    const auto& mr = records::find(recs, "mask/" + std::to_string(i));
    if (ex.image.shape() != Shape{ds.spec.height, ds.spec.width, 3} ||
        mr.shape != Shape{ds.spec.height, ds.spec.width}) {
      throw FormatError(path.string() + ": example " + std::to_string(i) + " has the wrong shape");
    }
    ex.mask = LabelMask(ds.spec.height, ds.spec.width);
    ex.mask.labels = records::to_bytes(mr);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

}  // namespace segrobust
