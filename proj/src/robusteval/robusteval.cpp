// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/robusteval.hpp"

#include "segrobust/error.hpp"
#include "segrobust/metrics.hpp"
#include "segrobust/parallel.hpp"
#include "segrobust/rng.hpp"

#include <algorithm>
#include <map>

namespace segrobust::eval {

using attacks::AttackKind;
using attacks::AttackSpec;

namespace {

// Rethrows the active exception with the failing attack and example named,
// keeping the error category.
[[noreturn]] void rethrow_with_context(const AttackSpec& spec, std::size_t example) {
  const std::string where = "attack '" + spec.id + "' failed on example " + std::to_string(example) + ": ";
  try {
    throw;
  } catch (const NumericalError& e) {
    throw NumericalError(where + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const std::exception& e) {
    throw Error(where + e.what());
  }
}

}  // namespace

std::uint64_t invocation_seed(std::uint64_t global_seed, std::size_t attack_index, std::size_t example) {
  return derive_seed({global_seed, attack_index, example});
}

std::vector<std::string> default_bounded_suite() { return {"pgd6", "pgd120", "padam120", "cira120", "cira+120"}; }

std::vector<std::string> default_min_perturb_suite() { return {"dag0.001", "dag0.003", "pgd20", "cira+20"}; }

std::vector<double> default_levels() { return {0.90, 0.98, 0.99}; }

EvalReport run_bounded_suite(const SegModel& model, const Dataset& dataset, const std::vector<AttackSpec>& suite,
                             const attacks::Budget& budget, const SuiteOptions& options, std::string model_id) {
  if (dataset.size() == 0) throw ConfigError("bounded suite needs a non-empty dataset");
  if (suite.empty()) throw ConfigError("bounded suite needs at least one attack");
  for (const auto& s : suite) {
    if (!attacks::is_bounded(s.kind)) throw ConfigError("attack '" + s.id + "' is not a bounded attack");
  }
  const std::size_t n = dataset.size(), k = suite.size();
  // Task (i, 0) is the clean pass of example i; (i, a + 1) is attack a.
  std::vector<double> scores(n * (k + 1));
  parallel_for(n * (k + 1), options.workers, [&](std::size_t task) {
    const std::size_t i = task / (k + 1), slot = task % (k + 1);
    const LabeledExample& ex = dataset.examples[i];
    if (slot == 0) {
      scores[task] = metrics::miou(full_forward(model, ex.image), ex.mask);
      return;
    }
    const AttackSpec& spec = suite[slot - 1];
    try {
      const auto r = attacks::run_attack(spec, model, ex, budget, invocation_seed(options.seed, slot - 1, i));
      scores[task] = metrics::miou(r.probs, ex.mask);
    } catch (const std::exception&) {
      rethrow_with_context(spec, i);
    }
  });

  EvalReport rep;
  rep.model = std::move(model_id);
  rep.budget = budget;
  for (const auto& s : suite) rep.attacks.push_back(s.id);
  rep.attack_means.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    EvalRow row;
    row.example = i;
    row.clean = scores[i * (k + 1)];
    row.scores.assign(scores.begin() + i * (k + 1) + 1, scores.begin() + (i + 1) * (k + 1));
    row.min = *std::min_element(row.scores.begin(), row.scores.end());
    rep.clean_mean += row.clean;
    for (std::size_t a = 0; a < k; ++a) rep.attack_means[a] += row.scores[a];
    rep.min_mean += row.min;
    rep.rows.push_back(std::move(row));
  }
  rep.clean_mean /= static_cast<double>(n);
  for (double& m : rep.attack_means) m /= static_cast<double>(n);
  rep.min_mean /= static_cast<double>(n);
  return rep;
}

MinPerturbRecord min_perturbation_search(const AttackSpec& spec, const SegModel& model, const LabeledExample& example,
                                         double mu, const SearchOptions& search, std::uint64_t seed) {
  if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("pixel-error level must be in (0, 1]");
  if (!(search.eps_hi > 0.0)) throw ConfigError("eps_hi must be positive");
  if (!attacks::is_bounded(spec.kind)) throw ConfigError("min_perturbation_search needs a bounded attack");
  MinPerturbRecord rec;
  rec.attack = spec.id;
  const double clean_pe = metrics::pixel_error(full_forward(model, example.image), example.mask);
  if (clean_pe >= mu) {
    rec.pixel_error = clean_pe;
    rec.norm = 0.0;
    rec.adversarial = example.image;
    return rec;
  }
  auto attack_at = [&](double eps) {
    return attacks::run_attack(spec, model, example, attacks::Budget{eps, 0.0, 1.0}, seed, mu);
  };
  attacks::AttackResult best = attack_at(search.eps_hi);
  if (best.pixel_error >= mu) {
    double lo = 0.0, hi = search.eps_hi;
    for (std::size_t s = 0; s < search.bisect_steps; ++s) {
      const double mid = 0.5 * (lo + hi);
      attacks::AttackResult r = attack_at(mid);
      if (r.pixel_error >= mu) {
        hi = mid;
        best = std::move(r);
      } else {
        lo = mid;
      }
    }
  }
  rec.pixel_error = best.pixel_error;
  rec.norm = best.linf;
  rec.adversarial = std::move(best.adversarial);
  return rec;
}

std::vector<MinPerturbRecord> run_min_perturb_suite(const SegModel& model, const Dataset& dataset,
                                                    const std::vector<AttackSpec>& suite,
                                                    const std::vector<double>& levels, const SearchOptions& search,
                                                    const SuiteOptions& options) {
  if (levels.empty()) throw ConfigError("at least one pixel-error level is required");
  if (suite.empty()) throw ConfigError("min-perturbation suite needs at least one attack");
  if (dataset.size() == 0) throw ConfigError("min-perturbation suite needs a non-empty dataset");
  const double target = *std::max_element(levels.begin(), levels.end());
  const std::size_t n = dataset.size(), k = suite.size();
  std::vector<MinPerturbRecord> out(n * k);
  parallel_for(n * k, options.workers, [&](std::size_t task) {
    const std::size_t i = task / k, a = task % k;
    const AttackSpec& spec = suite[a];
    const LabeledExample& ex = dataset.examples[i];
    const std::uint64_t seed = invocation_seed(options.seed, a, i);
    MinPerturbRecord rec;
    try {
      if (spec.kind == AttackKind::Dag) {
        attacks::AttackConfig cfg = spec.config;
        cfg.seed = seed;
        auto r = attacks::dag(model, ex, cfg, target);
        rec.pixel_error = r.pixel_error;
        rec.norm = r.linf;
        rec.adversarial = std::move(r.adversarial);
      } else {
        rec = min_perturbation_search(spec, model, ex, target, search, seed);
      }
    } catch (const std::exception&) {
      rethrow_with_context(spec, i);
    }
    rec.example = i;
    rec.attack_index = a;
    rec.attack = spec.id;
    out[task] = std::move(rec);
  });
  return out;
}

std::vector<std::pair<std::size_t, double>> per_example_min_norm(const std::vector<MinPerturbRecord>& records,
                                                                 double mu) {
  std::map<std::size_t, double> best;
  for (const auto& r : records) {
    auto [it, inserted] = best.emplace(r.example, r.norm_at(mu));
    if (!inserted) it->second = std::min(it->second, r.norm_at(mu));
  }
  return {best.begin(), best.end()};
}

std::vector<double> default_thresholds() {
  std::vector<double> t(200);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.1 * static_cast<double>(i) / static_cast<double>(t.size() - 1);
  return t;
}

SurvivalCurve survival_curve(const std::vector<MinPerturbRecord>& records, double mu,
                             const std::vector<double>& thresholds) {
  if (records.empty()) throw ConfigError("survival curve needs at least one record");
  const auto mins = per_example_min_norm(records, mu);
  SurvivalCurve c{mu, thresholds, {}};
  c.fraction.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto above = std::count_if(mins.begin(), mins.end(), [t](const auto& p) { return p.second > t; });
    c.fraction.push_back(static_cast<double>(above) / static_cast<double>(mins.size()));
  }
  return c;
}

std::vector<double> best_attack_distribution(const std::vector<MinPerturbRecord>& records, double mu,
                                             std::size_t attack_count) {
  // example -> (norm, attack index) of the winning record
  std::map<std::size_t, std::pair<double, std::size_t>> winner;
  for (const auto& r : records) {
    if (r.attack_index >= attack_count) throw ConfigError("record attack index out of range");
    if (!r.succeeded(mu)) continue;
    const std::pair<double, std::size_t> cand{r.norm, r.attack_index};
    auto [it, inserted] = winner.emplace(r.example, cand);
    if (!inserted && cand < it->second) it->second = cand;
  }
  if (winner.empty()) throw Error("best_attack_distribution: no successful example at this level");
  std::vector<double> counts(attack_count, 0.0);
  for (const auto& [ex, w] : winner) counts[w.second] += 1.0;
  for (double& c : counts) c /= static_cast<double>(winner.size());
  return counts;
}

}  // namespace segrobust::eval
