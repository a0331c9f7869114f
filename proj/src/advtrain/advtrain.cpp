// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/advtrain.hpp"

#include "segrobust/error.hpp"
#include "segrobust/metrics.hpp"
#include "segrobust/optim.hpp"
#include "segrobust/parallel.hpp"
#include "segrobust/rng.hpp"

#include <cmath>
#include <numeric>

namespace segrobust::advtrain {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kShuffleStream = 0x5E;
constexpr std::uint64_t kBatchStream = 0xBA;
constexpr std::uint64_t kValStream = 0x7A1;

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

}  // namespace

std::string to_string(InnerAttack a) {
  switch (a) {
    case InnerAttack::None:
      return "none";
    case InnerAttack::Pgd:
      return "pgd";
    case InnerAttack::CiraPlus:
      return "cira+";
  }
  return "none";
}

InnerAttack parse_inner_attack(const std::string& name) {
  if (name == "none") return InnerAttack::None;
  if (name == "pgd") return InnerAttack::Pgd;
  if (name == "cira+") return InnerAttack::CiraPlus;
  throw ConfigError("unknown training attack '" + name + "' (expected none, pgd or cira+)");
}

void TrainConfig::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must be in [0, 1]");
  if (attack == InnerAttack::None && rho > 0.0) throw ConfigError("rho > 0 needs a training attack");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (window == 0) throw ConfigError("window must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(lr_power > 0.0)) throw ConfigError("lr_power must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (workers == 0) throw ConfigError("workers must be positive");
  if (attack != InnerAttack::None) attack_config.validate();
}

attacks::AttackSpec TrainConfig::inner_spec() const {
  attacks::AttackSpec spec;
  spec.config = attack_config;
  spec.config.best_iterate = false;
  const std::string n = std::to_string(attack_config.iterations);
  switch (attack) {
    case InnerAttack::Pgd:
      spec.kind = attacks::AttackKind::Pgd;
      spec.id = "pgd" + n;
      break;
    case InnerAttack::CiraPlus:
      spec.kind = attacks::AttackKind::CiraPlus;
      spec.id = "cira+" + n;
      break;
    case InnerAttack::None:
      throw ConfigError("no training attack configured");
  }
  return spec;
}

std::size_t adversarial_count(double rho, std::size_t n) {
  // The slack keeps products like 0.3 * 10 from rounding up to 4.
  const double k = std::ceil(rho * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, k)));
}

std::vector<LabeledExample> make_adversarial_batch(const SegModel& model, const std::vector<LabeledExample>& batch,
                                                   const attacks::AttackSpec& attack, const attacks::Budget& budget,
                                                   double rho, std::uint64_t seed, std::uint64_t* generated) {
  if (batch.empty()) throw ConfigError("make_adversarial_batch needs a non-empty batch");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must be in [0, 1]");
  std::vector<LabeledExample> out = batch;
  const std::size_t k = adversarial_count(rho, batch.size());
  if (k == 0) return out;
  const auto order = shuffled(batch.size(), seed);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t i = order[j];
    auto r = attacks::run_attack(attack, model, batch[i], budget, derive_seed({seed, i}));
    out[i].image = std::move(r.adversarial);
    if (generated) ++*generated;
  }
  return out;
}

double batch_loss_and_gradient(const SegModel& model, const std::vector<LabeledExample>& batch,
                               std::vector<Tensor>& gradients) {
  if (batch.empty()) throw ConfigError("empty batch");
  const auto& params = model.params();
  gradients.clear();
  for (const auto& p : params) gradients.emplace_back(p.value.shape());
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    Graph g;
    ModelBinding binding(g, model, true);
    Var probs = full_forward(binding, g.constant(ex.image));
    Var ce = metrics::cross_entropy(probs, metrics::one_hot(ex.mask, model.geometry().classes));
    const auto leaves = binding.all_params();
    const auto grads = g.backward(ce, leaves);
    loss += ce.value().item() * inv;
    for (std::size_t p = 0; p < grads.size(); ++p) {
      auto dst = gradients[p].data();
      auto src = grads[p].data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i] * inv;
    }
  }
  return loss;
}

std::size_t select_epoch(const std::vector<EpochLog>& epochs, std::size_t window) {
  if (epochs.empty()) throw ConfigError("no epochs to select from");
  if (window == 0) throw ConfigError("window must be positive");
  const std::size_t n = epochs.size();
  const std::size_t w = std::min(window, n);
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t e = w; e <= n; ++e) {
    double s = 0.0;
    for (std::size_t i = e - w; i < e; ++i) s += epochs[i].robust_miou;
    s /= static_cast<double>(w);
    if (best == 0 || s > best_score) {
      best = e;
      best_score = s;
    }
  }
  return best;
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.size() == 0 || val_set.size() == 0) throw ConfigError("training needs non-empty train and val sets");
  if (!(train_set.spec == val_set.spec)) throw ConfigError("train and val sets have different data specs");

  ModelGeometry geometry;
  geometry.height = train_set.spec.height;
  geometry.width = train_set.spec.width;
  geometry.classes = train_set.spec.classes;
  SegModel model = SegModel::init(geometry, derive_seed({config.seed, kInitStream}));

  const bool adversarial = config.attack != InnerAttack::None;
  const attacks::AttackSpec spec = adversarial ? config.inner_spec() : attacks::AttackSpec{};
  const attacks::Budget budget{config.epsilon, 0.0, 1.0};

  std::vector<SgdMomentumState> opt;
  for (const auto& p : model.params())
    opt.emplace_back(p.value.shape(), config.lr, config.momentum, config.weight_decay);

  const std::size_t n = train_set.size();
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  const double total_steps = static_cast<double>(batches * config.epochs);
  std::size_t step = 0;

  TrainLog log;
  std::vector<SegModel> snapshots;
  std::vector<Tensor> grads;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = shuffled(n, derive_seed({config.seed, kShuffleStream, epoch}));
    double loss_sum = 0.0;
    double lr = config.lr;
    for (std::size_t b = 0; b < batches; ++b, ++step) {
      std::vector<LabeledExample> batch;
      for (std::size_t i = b * config.batch_size; i < std::min(n, (b + 1) * config.batch_size); ++i)
        batch.push_back(train_set.examples[order[i]]);
      if (adversarial && config.rho > 0.0)
        batch = make_adversarial_batch(model, batch, spec, budget, config.rho,
                                       derive_seed({config.seed, kBatchStream, epoch, b}), &log.generated);
      double loss = 0.0;
      try {
        loss = batch_loss_and_gradient(model, batch, grads);
      } catch (const NumericalError& e) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b) + ": " + e.what());
      }
      if (!std::isfinite(loss))
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
      loss_sum += loss;
      lr = config.lr * std::pow(1.0 - static_cast<double>(step) / total_steps, config.lr_power);
      auto& params = model.params();
      for (std::size_t p = 0; p < params.size(); ++p) {
        opt[p].lr = lr;
        params[p].value = sgd_momentum_step(opt[p], params[p].value, grads[p]);
        if (!params[p].value.all_finite())
          throw NumericalError("non-finite parameter " + params[p].name + " at epoch " + std::to_string(epoch));
      }
    }

    // Validation on a read-only snapshot.
    const std::size_t m = val_set.size();
    std::vector<double> clean(m), robust(m);
    parallel_for(m, config.workers, [&](std::size_t i) {
      const auto& ex = val_set.examples[i];
      clean[i] = metrics::miou(full_forward(model, ex.image), ex.mask);
      if (adversarial) {
        auto r = attacks::run_attack(spec, model, ex, budget, derive_seed({config.seed, kValStream, epoch, i}));
        robust[i] = metrics::miou(r.probs, ex.mask);
      } else {
        robust[i] = clean[i];
      }
    });
    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / static_cast<double>(batches);
    entry.clean_miou = metrics::dataset_miou(clean);
    entry.robust_miou = metrics::dataset_miou(robust);
    entry.lr = lr;
    log.epochs.push_back(entry);
    snapshots.push_back(model);
    if (on_epoch) on_epoch(entry, model);
  }

  log.selected_epoch = select_epoch(log.epochs, config.window);
  return {std::move(snapshots[log.selected_epoch - 1]), std::move(log)};
}

}  // namespace segrobust::advtrain
