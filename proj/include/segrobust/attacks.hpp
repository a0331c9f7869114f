// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segrobust/segmodel.hpp"
#include "segrobust/synthdata.hpp"
#include "segrobust/tensor.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace segrobust::attacks {

/// L-inf ball of radius epsilon intersected with the input domain.
struct Budget {
  double epsilon = 0.03;
  double lower = 0.0;
  double upper = 1.0;
};

struct AttackConfig {
  std::size_t iterations = 1;
  /// Signed-gradient step of PGD.
  double step_size = 0.01;
  /// Adam learning rate of PAdam, CIRA and CIRA+.
  double adam_lr = 0.01;
  /// Weight of the cross-entropy term in CIRA+; the cosine term gets 1 - w.
  double mix_weight = 0.5;
  double dag_step_size = 0.003;
  std::size_t dag_max_iter = 200;
  std::uint64_t seed = 0;
  /// Restart 0 starts at x; later restarts start uniformly inside the ball.
  std::size_t restarts = 1;
  /// Return the best visited iterate; false returns the last one.
  bool best_iterate = true;

  void validate() const;
};

struct AttackResult {
  Tensor adversarial;
  /// Model output at `adversarial`.
  Tensor probs;
  double linf = 0.0;
  /// Pixel error against the source ground truth.
  double pixel_error = 0.0;
  /// Targeted attacks: agreement with the target mask.
  std::optional<double> target_agreement;
  /// Attack objective at the returned iterate (minimized for targeted CIRA+).
  double objective = 0.0;
  std::size_t iterations = 0;
  /// Objective at every visited iterate, in visiting order.
  std::vector<double> objective_trace;
  /// Evaluations made while optimizing.
  EvalCounters optimization;
  /// All evaluations, including setup and the final reporting pass.
  EvalCounters total;
  /// DAG: whether the pixel-error target was reached.
  bool success = true;
};

/// Clip z into [x - eps, x + eps], then into the domain.
Tensor project(const Tensor& z, const Tensor& x, const Budget& budget);

/// Differentiable scalar objective of an image, maximized by the engine.
class Objective {
 public:
  virtual ~Objective() = default;
  /// Value at `image`; writes d value / d image when `gradient` is non-null.
  virtual double evaluate(const Tensor& image, Tensor* gradient) = 0;
};

/// ce_weight * CE(f(x), y) + cos_weight * CosSim(f^b(x), feature_target).
/// Zero-weight terms are never evaluated. `counters` must outlive the result.
std::unique_ptr<Objective> hybrid_objective(const SegModel& model, Tensor one_hot, Tensor feature_target,
                                            double ce_weight, double cos_weight, EvalCounters& counters);

enum class StepRule { Signed, Adam };

struct AscentOptions {
  StepRule rule = StepRule::Signed;
  std::size_t iterations = 1;
  /// Signed step size, or the Adam learning rate.
  double step = 0.01;
  bool best_iterate = true;
  std::size_t restarts = 1;
  std::uint64_t restart_seed = 0;
};

struct AscentResult {
  Tensor image;
  double value = 0.0;
  std::vector<double> trace;
};

/// Projected ascent from x. Each restart evaluates `iterations` gradients
/// and, in best-iterate mode, scores the final iterate too.
AscentResult projected_ascent(Objective& objective, const Tensor& x, const Budget& budget,
                              const AscentOptions& options);

/// project(x + eps * sign(grad), x, eps) from a single gradient evaluation.
Tensor fgsm_step(Objective& objective, const Tensor& x, const Budget& budget);

/// Random CIRA target: uniform [0, 1] entries shaped like the backbone output.
Tensor random_target(const ModelGeometry& geometry, std::uint64_t seed);

AttackResult fgsm(const SegModel& model, const LabeledExample& example, const Budget& budget);
AttackResult pgd(const SegModel& model, const LabeledExample& example, const Budget& budget,
                 const AttackConfig& config);
AttackResult padam(const SegModel& model, const LabeledExample& example, const Budget& budget,
                   const AttackConfig& config);
/// Optimizes the backbone only; the example mask is used for reporting.
AttackResult cira(const SegModel& model, const LabeledExample& example, const Budget& budget,
                  const AttackConfig& config);
AttackResult cira_targeted(const SegModel& model, const LabeledExample& example, const Tensor& target_image,
                           const Budget& budget, const AttackConfig& config);
AttackResult cira_plus(const SegModel& model, const LabeledExample& example, const Budget& budget,
                       const AttackConfig& config);
AttackResult cira_plus_targeted(const SegModel& model, const LabeledExample& example,
                                const LabeledExample& target, const Budget& budget, const AttackConfig& config);
/// Unbounded: steps on still-correct pixels until pixel error >= mu or
/// dag_max_iter steps. A zero gradient ends the run as a failure.
AttackResult dag(const SegModel& model, const LabeledExample& example, const AttackConfig& config, double mu);

enum class AttackKind { Fgsm, Pgd, PAdam, Cira, CiraPlus, Dag };

struct AttackSpec {
  std::string id;
  AttackKind kind = AttackKind::Pgd;
  AttackConfig config;
};

/// Parses ids "fgsm", "pgd<N>", "padam<N>", "cira<N>", "cira+<N>" and
/// "dag<step>" (e.g. "dag0.003"); other fields come from `defaults`.
AttackSpec parse_attack(std::string_view id, const AttackConfig& defaults = {});

/// Column label such as "PGD(120)" or "DAG(0.003)".
std::string display_name(const AttackSpec& spec);

bool is_bounded(AttackKind kind);

/// Runs an untargeted attack with config.seed replaced by `seed`. `mu` is
/// only used by DAG.
AttackResult run_attack(const AttackSpec& spec, const SegModel& model, const LabeledExample& example,
                        const Budget& budget, std::uint64_t seed, double mu = 0.99);

}  // namespace segrobust::attacks
