// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segrobust/attacks.hpp"
#include "segrobust/segmodel.hpp"
#include "segrobust/synthdata.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace segrobust::advtrain {

enum class InnerAttack { None, Pgd, CiraPlus };

std::string to_string(InnerAttack a);
InnerAttack parse_inner_attack(const std::string& name);

struct TrainConfig {
  InnerAttack attack = InnerAttack::None;
  /// Inner attack settings; best_iterate is forced off during training.
  attacks::AttackConfig attack_config{.iterations = 3, .step_size = 0.01, .adam_lr = 0.01};
  double epsilon = 0.03;
  /// Adversarial fraction of every batch.
  double rho = 0.0;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  double lr = 0.01;
  /// lr_t = lr * (1 - t / T)^lr_power over all T optimizer steps.
  double lr_power = 0.9;
  double weight_decay = 1e-4;
  double momentum = 0.9;
  std::size_t window = 10;
  std::uint64_t seed = 0;
  /// Parallelism of the per-epoch validation pass.
  std::size_t workers = 1;

  void validate() const;
  /// The inner attack as a suite entry; throws for InnerAttack::None.
  attacks::AttackSpec inner_spec() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double clean_miou = 0.0;
  double robust_miou = 0.0;
  double lr = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  /// 1-based epoch whose checkpoint is returned.
  std::size_t selected_epoch = 0;
  /// Adversarial examples generated for training batches.
  std::uint64_t generated = 0;
};

/// Replaces the first ceil(rho * n) examples of a seeded shuffle with
/// adversarial versions against `model`. Labels are kept. Returns the
/// batch in its original order.
std::vector<LabeledExample> make_adversarial_batch(const SegModel& model, const std::vector<LabeledExample>& batch,
                                                   const attacks::AttackSpec& attack, const attacks::Budget& budget,
                                                   double rho, std::uint64_t seed,
                                                   std::uint64_t* generated = nullptr);

/// Number of adversarial examples in a batch of n.
std::size_t adversarial_count(double rho, std::size_t n);

/// Mean cross-entropy of a batch and its gradient for every parameter.
double batch_loss_and_gradient(const SegModel& model, const std::vector<LabeledExample>& batch,
                               std::vector<Tensor>& gradients);

/// Epoch e (1-based) is eligible once e >= min(window, epochs); its score
/// is the mean robust mIoU over epochs (e - window, e]. Ties go to the
/// earlier epoch.
std::size_t select_epoch(const std::vector<EpochLog>& epochs, std::size_t window);

struct TrainResult {
  SegModel model;
  TrainLog log;
};

using EpochCallback = std::function<void(const EpochLog&, const SegModel&)>;

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set,
                  const EpochCallback& on_epoch = {});

}  // namespace segrobust::advtrain
