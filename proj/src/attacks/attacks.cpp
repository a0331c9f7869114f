// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/attacks.hpp"

#include "segrobust/error.hpp"
#include "segrobust/metrics.hpp"
#include "segrobust/ops.hpp"
#include "segrobust/optim.hpp"
#include "segrobust/rng.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace segrobust::attacks {

namespace {

constexpr std::uint64_t kTargetStream = 0x2A;
constexpr std::uint64_t kRestartStream = 0x8E57A87;

// w_ce * CE(f(x), y) + w_cos * CosSim(f^b(x), target). Zero-weight terms are
// never evaluated, so a pure cosine objective never touches the head.
class HybridObjective final : public Objective {
 public:
  HybridObjective(const SegModel& model, Tensor one_hot, Tensor feature_target, double ce_weight,
                  double cos_weight, EvalCounters& counters)
      : model_(model),
        one_hot_(std::move(one_hot)),
        target_(std::move(feature_target)),
        ce_weight_(ce_weight),
        cos_weight_(cos_weight),
        counters_(counters) {}

  double evaluate(const Tensor& image, Tensor* gradient) override {
    Graph g;
    ModelBinding b(g, model_, false, &counters_);
    Var x = gradient ? g.leaf(image) : g.constant(image);
    Var features = backbone_forward(b, x);
    std::optional<Var> total;
    if (ce_weight_ != 0.0) {
      Var ce = metrics::cross_entropy(head_forward(b, x, features), one_hot_);
      total = ce_weight_ == 1.0 ? ce : scale(ce, ce_weight_);
    }
    if (cos_weight_ != 0.0) {
      ++counters_.feature_terms;
      Var cs = metrics::cos_sim(features, g.constant(target_));
      Var term = cos_weight_ == 1.0 ? cs : scale(cs, cos_weight_);
      total = total ? add(*total, term) : term;
    }
    if (!total) throw ConfigError("objective with both weights zero");
    const double value = total->value().item();
    if (gradient) {
      if (total->requires_grad()) {
        *gradient = std::move(g.backward(*total, {x})[0]);
      } else {
        *gradient = Tensor(image.shape());
      }
    }
    return value;
  }

 private:
  const SegModel& model_;
  Tensor one_hot_;
  Tensor target_;
  double ce_weight_;
  double cos_weight_;
  EvalCounters& counters_;
};

void check_budget(const Budget& b) {
  if (!(b.epsilon >= 0.0) || !std::isfinite(b.epsilon)) throw ConfigError("epsilon must be finite and >= 0");
  if (!(b.lower < b.upper)) throw ConfigError("budget domain is empty");
}

Tensor step_from(const Tensor& x, const Tensor& grad, StepRule rule, double step, AdamState& adam) {
  if (rule == StepRule::Signed) return ops::add(x, ops::scale(ops::sign(grad), step));
  // Ascent through a minimizing Adam: feed the negated gradient.
  return adam_step(adam, x, ops::scale(grad, -1.0));
}

// Forward pass at the returned image and the report fields derived from it.
void finish(const SegModel& model, const LabeledExample& example, const Tensor& x, AttackResult& r) {
  r.probs = full_forward(model, r.adversarial, &r.total);
  r.pixel_error = metrics::pixel_error(r.probs, example.mask);
  r.linf = max_abs_diff(r.adversarial, x);
}

AttackResult run_hybrid(const SegModel& model, const LabeledExample& example, const Budget& budget,
                        const AttackConfig& config, Tensor one_hot, Tensor target, double ce_weight,
                        double cos_weight, StepRule rule, double step) {
  config.validate();
  check_budget(budget);
  check_image(model, example.image);
  AttackResult r;
  HybridObjective obj(model, std::move(one_hot), std::move(target), ce_weight, cos_weight, r.optimization);
  AscentOptions opt{rule, config.iterations, step, config.best_iterate, config.restarts,
                    derive_seed({config.seed, kRestartStream})};
  AscentResult a = projected_ascent(obj, example.image, budget, opt);
  r.adversarial = std::move(a.image);
  r.objective = a.value;
  r.objective_trace = std::move(a.trace);
  r.iterations = config.iterations * config.restarts;
  r.total += r.optimization;
  finish(model, example, example.image, r);
  return r;
}

void negate_objective(AttackResult& r) {
  r.objective = -r.objective;
  for (double& v : r.objective_trace) v = -v;
}

}  // namespace

std::unique_ptr<Objective> hybrid_objective(const SegModel& model, Tensor one_hot, Tensor feature_target,
                                            double ce_weight, double cos_weight, EvalCounters& counters) {
  return std::make_unique<HybridObjective>(model, std::move(one_hot), std::move(feature_target), ce_weight,
                                           cos_weight, counters);
}

void AttackConfig::validate() const {
  if (iterations < 1) throw ConfigError("attack iterations must be >= 1");
  if (!(mix_weight >= 0.0 && mix_weight <= 1.0)) throw ConfigError("mix_weight must be in [0, 1]");
  if (!(step_size > 0.0) || !(adam_lr > 0.0) || !(dag_step_size > 0.0)) throw ConfigError("step sizes must be positive");
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
}

Tensor project(const Tensor& z, const Tensor& x, const Budget& budget) {
  ops::require_same_shape(z, x, "project");
  Tensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double v = std::clamp(z[i], x[i] - budget.epsilon, x[i] + budget.epsilon);
    out[i] = std::clamp(v, budget.lower, budget.upper);
  }
  return out;
}

AscentResult projected_ascent(Objective& objective, const Tensor& x, const Budget& budget,
                              const AscentOptions& options) {
  if (options.iterations < 1 || options.restarts < 1) throw ConfigError("ascent needs >= 1 iteration and restart");
  AscentResult best{x, -std::numeric_limits<double>::infinity(), {}};
  Rng restart_rng(options.restart_seed);
  for (std::size_t r = 0; r < options.restarts; ++r) {
    Tensor cur = x;
    if (r > 0) {
      for (double& v : cur.data()) v += restart_rng.uniform(-budget.epsilon, budget.epsilon);
      cur = project(cur, x, budget);
    }
    AdamState adam(x.shape(), options.step);
    auto consider = [&](const Tensor& img, double value) {
      best.trace.push_back(value);
      if (value > best.value) {
        best.value = value;
        best.image = img;
      }
    };
    for (std::size_t t = 0; t < options.iterations; ++t) {
      Tensor grad;
      const double value = objective.evaluate(cur, &grad);
      if (options.best_iterate) consider(cur, value);
      cur = project(step_from(cur, grad, options.rule, options.step, adam), x, budget);
    }
    if (options.best_iterate) {
      consider(cur, objective.evaluate(cur, nullptr));
    } else {
      best.image = cur;
      best.value = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return best;
}

Tensor fgsm_step(Objective& objective, const Tensor& x, const Budget& budget) {
  check_budget(budget);
  Tensor grad;
  objective.evaluate(x, &grad);
  return project(ops::add(x, ops::scale(ops::sign(grad), budget.epsilon)), x, budget);
}

Tensor random_target(const ModelGeometry& geometry, std::uint64_t seed) {
  Tensor z(geometry.feature_shape());
  Rng rng(derive_seed({seed, kTargetStream}));
  for (double& v : z.data()) v = rng.uniform();
  return z;
}

AttackResult fgsm(const SegModel& model, const LabeledExample& example, const Budget& budget) {
  check_image(model, example.image);
  AttackResult r;
  const std::size_t classes = model.geometry().classes;
  HybridObjective obj(model, metrics::one_hot(example.mask, classes), Tensor(), 1.0, 0.0, r.optimization);
  r.adversarial = fgsm_step(obj, example.image, budget);
  r.iterations = 1;
  r.total += r.optimization;
  finish(model, example, example.image, r);
  r.objective = metrics::cross_entropy(r.probs, example.mask);
  r.objective_trace = {r.objective};
  return r;
}

AttackResult pgd(const SegModel& model, const LabeledExample& example, const Budget& budget,
                 const AttackConfig& config) {
  return run_hybrid(model, example, budget, config, metrics::one_hot(example.mask, model.geometry().classes),
                    Tensor(), 1.0, 0.0, StepRule::Signed, config.step_size);
}

AttackResult padam(const SegModel& model, const LabeledExample& example, const Budget& budget,
                   const AttackConfig& config) {
  return run_hybrid(model, example, budget, config, metrics::one_hot(example.mask, model.geometry().classes),
                    Tensor(), 1.0, 0.0, StepRule::Adam, config.adam_lr);
}

AttackResult cira(const SegModel& model, const LabeledExample& example, const Budget& budget,
                  const AttackConfig& config) {
  return run_hybrid(model, example, budget, config, Tensor(), random_target(model.geometry(), config.seed), 0.0,
                    1.0, StepRule::Adam, config.adam_lr);
}

AttackResult cira_targeted(const SegModel& model, const LabeledExample& example, const Tensor& target_image,
                           const Budget& budget, const AttackConfig& config) {
  check_image(model, target_image);
  if (bit_equal(target_image, example.image)) throw ConfigError("targeted CIRA: target equals the source image");
  EvalCounters setup;
  Tensor target = backbone_forward(model, target_image, &setup);
  AttackResult r = run_hybrid(model, example, budget, config, Tensor(), std::move(target), 0.0, 1.0,
                              StepRule::Adam, config.adam_lr);
  r.total += setup;
  return r;
}

AttackResult cira_plus(const SegModel& model, const LabeledExample& example, const Budget& budget,
                       const AttackConfig& config) {
  config.validate();
  const double w = config.mix_weight;
  Tensor y = w != 0.0 ? metrics::one_hot(example.mask, model.geometry().classes) : Tensor();
  Tensor z = w != 1.0 ? random_target(model.geometry(), config.seed) : Tensor();
  return run_hybrid(model, example, budget, config, std::move(y), std::move(z), w, 1.0 - w, StepRule::Adam,
                    config.adam_lr);
}

AttackResult cira_plus_targeted(const SegModel& model, const LabeledExample& example,
                                const LabeledExample& target, const Budget& budget, const AttackConfig& config) {
  config.validate();
  check_image(model, target.image);
  if (bit_equal(target.image, example.image)) throw ConfigError("targeted CIRA+: target equals the source image");
  const double w = config.mix_weight;
  EvalCounters setup;
  Tensor y = w != 0.0 ? metrics::one_hot(target.mask, model.geometry().classes) : Tensor();
  Tensor feats = w != 1.0 ? backbone_forward(model, target.image, &setup) : Tensor();
  // Descent on w*L(y') - (1-w)*CosSim is ascent on -w*L(y') + (1-w)*CosSim.
  AttackResult r = run_hybrid(model, example, budget, config, std::move(y), std::move(feats), -w, 1.0 - w,
                              StepRule::Adam, config.adam_lr);
  negate_objective(r);
  r.total += setup;
  r.target_agreement = metrics::agreement(r.probs, target.mask);
  return r;
}

AttackResult dag(const SegModel& model, const LabeledExample& example, const AttackConfig& config, double mu) {
  config.validate();
  if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("pixel-error level must be in (0, 1]");
  check_image(model, example.image);
  const std::size_t classes = model.geometry().classes;
  const Tensor& x = example.image;
  AttackResult r;
  Tensor cur = x;
  for (std::size_t t = 0;; ++t) {
    Graph g;
    ModelBinding b(g, model, false, &r.optimization);
    Var img = g.leaf(cur);
    Var probs = full_forward(b, img);
    const double pe = metrics::pixel_error(probs.value(), example.mask);
    r.objective_trace.push_back(pe);
    r.iterations = t;
    r.probs = probs.value();
    r.pixel_error = pe;
    if (pe >= mu) {
      r.success = true;
      break;
    }
    if (t == config.dag_max_iter) {
      r.success = false;
      break;
    }
    // Cross-entropy over the pixels that are still predicted correctly.
    const LabelMask pred = metrics::predict(probs.value());
    LabelMask active = example.mask;
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (active[i] != pred[i]) active[i] = kVoidLabel;
    }
    Var loss = metrics::cross_entropy(probs, metrics::one_hot(active, classes));
    const Tensor grad = g.backward(loss, {img})[0];
    const double n = linf_norm(grad);
    if (n == 0.0) {
      r.success = false;
      break;
    }
    cur = ops::clamp(ops::add(cur, ops::scale(grad, config.dag_step_size / n)), 0.0, 1.0);
  }
  r.adversarial = cur;
  r.linf = max_abs_diff(cur, x);
  r.objective = r.pixel_error;
  r.total = r.optimization;
  return r;
}

namespace {

std::size_t parse_count(std::string_view digits, std::string_view id) {
  std::size_t n = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc() || p != digits.data() + digits.size() || n == 0) {
    throw ConfigError("bad iteration count in attack id '" + std::string(id) + "'");
  }
  return n;
}

}  // namespace

AttackSpec parse_attack(std::string_view id, const AttackConfig& defaults) {
  AttackSpec s{std::string(id), AttackKind::Pgd, defaults};
  auto rest = [&](std::string_view prefix) { return id.substr(prefix.size()); };
  if (id == "fgsm") {
    s.kind = AttackKind::Fgsm;
    s.config.iterations = 1;
  } else if (id.starts_with("padam")) {
    s.kind = AttackKind::PAdam;
    s.config.iterations = parse_count(rest("padam"), id);
  } else if (id.starts_with("pgd")) {
    s.kind = AttackKind::Pgd;
    s.config.iterations = parse_count(rest("pgd"), id);
  } else if (id.starts_with("cira+")) {
    s.kind = AttackKind::CiraPlus;
    s.config.iterations = parse_count(rest("cira+"), id);
  } else if (id.starts_with("cira")) {
    s.kind = AttackKind::Cira;
    s.config.iterations = parse_count(rest("cira"), id);
  } else if (id.starts_with("dag")) {
    s.kind = AttackKind::Dag;
    const std::string num(rest("dag"));
    std::size_t used = 0;
    double step = 0.0;
    try {
      step = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != num.size() || !(step > 0.0)) {
      throw ConfigError("bad step size in attack id '" + std::string(id) + "'");
    }
    s.config.dag_step_size = step;
  } else {
    throw ConfigError("unknown attack '" + std::string(id) + "'");
  }
  s.config.validate();
  return s;
}

std::string display_name(const AttackSpec& spec) {
  std::ostringstream os;
  switch (spec.kind) {
    case AttackKind::Fgsm: return "FGSM";
    case AttackKind::Pgd: os << "PGD(" << spec.config.iterations << ")"; break;
    case AttackKind::PAdam: os << "PAdam(" << spec.config.iterations << ")"; break;
    case AttackKind::Cira: os << "CIRA(" << spec.config.iterations << ")"; break;
    case AttackKind::CiraPlus: os << "CIRA+(" << spec.config.iterations << ")"; break;
    case AttackKind::Dag: os << "DAG(" << spec.config.dag_step_size << ")"; break;
  }
  return os.str();
}

bool is_bounded(AttackKind kind) { return kind != AttackKind::Dag; }

AttackResult run_attack(const AttackSpec& spec, const SegModel& model, const LabeledExample& example,
                        const Budget& budget, std::uint64_t seed, double mu) {
  AttackConfig cfg = spec.config;
  cfg.seed = seed;
  switch (spec.kind) {
    case AttackKind::Fgsm: return fgsm(model, example, budget);
    case AttackKind::Pgd: return pgd(model, example, budget, cfg);
    case AttackKind::PAdam: return padam(model, example, budget, cfg);
    case AttackKind::Cira: return cira(model, example, budget, cfg);
    case AttackKind::CiraPlus: return cira_plus(model, example, budget, cfg);
    case AttackKind::Dag: return dag(model, example, cfg, mu);
  }
  throw ConfigError("unhandled attack kind");
}

}  // namespace segrobust::attacks
