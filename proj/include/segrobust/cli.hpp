// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace segrobust::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kInputMissing = 3, kNumerical = 4 };

/// Every recognized key with its default. A null "seed" falls back to
/// SEGROBUST_SEED, then 0.
nlohmann::json default_config();

/// Defaults, then the config file, then `--dotted.key value` overrides.
/// Unknown keys are config errors. Values parse as JSON when they can and
/// as strings otherwise.
nlohmann::json resolve_config(const std::optional<std::string>& config_path,
                              const std::vector<std::pair<std::string, std::string>>& overrides,
                              const char* env_seed);

/// Hex CRC-32 of the canonical config dump, without "workers".
std::string config_digest(const nlohmann::json& config);

void cmd_gen_data(const nlohmann::json& config, std::ostream& out);
void cmd_train(const nlohmann::json& config, std::ostream& out);
void cmd_attack(const nlohmann::json& config, std::ostream& out);
void cmd_minperturb(const nlohmann::json& config, std::ostream& out);
void cmd_report(const nlohmann::json& config, std::ostream& out);

/// Full command line entry point; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace segrobust::cli
