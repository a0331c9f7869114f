// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segrobust/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace segrobust {

/// Label of pixels excluded from every error and score computation.
inline constexpr std::uint8_t kVoidLabel = 255;

struct LabelMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> labels;

  LabelMask() = default;
  LabelMask(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), labels(h * w, fill) {}

  std::size_t size() const { return labels.size(); }
  std::uint8_t operator[](std::size_t i) const { return labels[i]; }
  std::uint8_t& operator[](std::size_t i) { return labels[i]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
  std::uint8_t& at(std::size_t y, std::size_t x) { return labels[y * width + x]; }
  bool operator==(const LabelMask&) const = default;
};

struct LabeledExample {
  Tensor image;  // (H, W, 3) in [0, 1]
  LabelMask mask;
};

struct DataSpec {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t classes = 4;
  double void_fraction = 0.05;

  bool operator==(const DataSpec&) const = default;
};

struct Dataset {
  std::string split;
  std::uint64_t seed = 0;
  DataSpec spec;
  std::vector<LabeledExample> examples;

  std::size_t size() const { return examples.size(); }
};

/// Base color of a class; class 0 is the background.
std::array<double, 3> class_color(std::size_t cls, std::size_t classes);

/// Textured class-0 background with 1-3 non-overlapping rectangles or discs
/// of classes 1..C-1; optional void ring around each shape.
Dataset generate(std::uint64_t seed, std::size_t count, const DataSpec& spec, std::string split = "train");

struct DataSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Splits use seeds seed, seed + 1, seed + 2.
DataSplits generate_splits(std::uint64_t seed, std::size_t train_count, std::size_t val_count,
                           std::size_t test_count, const DataSpec& spec);

/// Index of a different example, chosen by a seeded draw. Throws when the
/// dataset has fewer than two examples.
std::size_t pick_target(const Dataset& dataset, std::size_t index, std::uint64_t seed);

inline constexpr std::uint32_t kDatasetVersion = 1;

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace segrobust
