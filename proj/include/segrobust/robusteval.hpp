// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segrobust/attacks.hpp"
#include "segrobust/segmodel.hpp"
#include "segrobust/synthdata.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace segrobust::eval {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
/// L-inf norm beyond which perturbations become visible.
inline constexpr double kVisibilityLandmark = 0.015;

struct SuiteOptions {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// Per-example seed of one attack invocation.
std::uint64_t invocation_seed(std::uint64_t global_seed, std::size_t attack_index, std::size_t example);

std::vector<std::string> default_bounded_suite();
std::vector<std::string> default_min_perturb_suite();
std::vector<double> default_levels();

struct EvalRow {
  std::size_t example = 0;
  double clean = 0.0;
  /// Per-example mIoU under each attack, in suite order.
  std::vector<double> scores;
  double min = 0.0;
};

struct EvalReport {
  std::string model;
  std::vector<std::string> attacks;
  attacks::Budget budget;
  std::vector<EvalRow> rows;
  double clean_mean = 0.0;
  std::vector<double> attack_means;
  double min_mean = 0.0;
};

/// Every attack on every example; MIN is the per-example minimum over the
/// attacks, averaged over examples.
EvalReport run_bounded_suite(const SegModel& model, const Dataset& dataset,
                             const std::vector<attacks::AttackSpec>& suite, const attacks::Budget& budget,
                             const SuiteOptions& options, std::string model_id = "model");

struct MinPerturbRecord {
  std::size_t example = 0;
  std::size_t attack_index = 0;
  std::string attack;
  double pixel_error = 0.0;
  /// L-inf norm of the returned perturbation (finite).
  double norm = 0.0;
  Tensor adversarial;

  bool succeeded(double mu) const { return pixel_error >= mu; }
  /// The norm, or +inf when this record does not reach level mu.
  double norm_at(double mu) const { return succeeded(mu) ? norm : kInfinity; }
};

struct SearchOptions {
  double eps_hi = 0.2;
  std::size_t bisect_steps = 12;
};

/// Bisection on epsilon over [0, eps_hi] around a bounded attack. A run that
/// misses mu at eps_hi yields a record that fails level mu.
MinPerturbRecord min_perturbation_search(const attacks::AttackSpec& spec, const SegModel& model,
                                         const LabeledExample& example, double mu, const SearchOptions& search,
                                         std::uint64_t seed);

/// One record per (example, attack), ordered by example then attack. DAG
/// runs natively; bounded attacks go through the bisection at max(levels).
std::vector<MinPerturbRecord> run_min_perturb_suite(const SegModel& model, const Dataset& dataset,
                                                    const std::vector<attacks::AttackSpec>& suite,
                                                    const std::vector<double>& levels, const SearchOptions& search,
                                                    const SuiteOptions& options);

/// Per-example minimum norm at level mu over all records, ordered by example
/// id (+inf when no record reaches mu).
std::vector<std::pair<std::size_t, double>> per_example_min_norm(const std::vector<MinPerturbRecord>& records,
                                                                 double mu);

struct SurvivalCurve {
  double mu = 0.0;
  std::vector<double> thresholds;
  std::vector<double> fraction;
};

/// 200 uniform thresholds over [0, 0.1].
std::vector<double> default_thresholds();

SurvivalCurve survival_curve(const std::vector<MinPerturbRecord>& records, double mu,
                             const std::vector<double>& thresholds);

/// Share of successful examples on which each attack found the smallest
/// norm (ties to the lowest attack index). Throws when nothing succeeded.
std::vector<double> best_attack_distribution(const std::vector<MinPerturbRecord>& records, double mu,
                                             std::size_t attack_count);

// Exports. `provenance` is written into every file.
struct Provenance {
  std::string version;
  std::string config_digest;
};

nlohmann::json report_to_json(const EvalReport& report, const Provenance& provenance);
EvalReport report_from_json(const nlohmann::json& j);
void write_report(const std::filesystem::path& path, const EvalReport& report, const Provenance& provenance);
EvalReport read_report(const std::filesystem::path& path);

/// Level column name, e.g. 0.9 -> "succ_90".
std::string level_column(double mu);
std::string format_number(double v);

void write_records_csv(const std::filesystem::path& path, const std::vector<MinPerturbRecord>& records,
                       const std::vector<double>& levels, const Provenance& provenance);
std::vector<MinPerturbRecord> read_records_csv(const std::filesystem::path& path);
void write_survival_csv(const std::filesystem::path& path, const SurvivalCurve& curve, const Provenance& provenance);
/// example_id plus one min-norm column per level; +inf is an empty cell.
void write_min_norm_csv(const std::filesystem::path& path, const std::vector<MinPerturbRecord>& records,
                        const std::vector<double>& levels, const Provenance& provenance);

}  // namespace segrobust::eval
