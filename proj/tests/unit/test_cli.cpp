// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/cli.hpp"
#include "segrobust/error.hpp"
#include "segrobust/records.hpp"
#include "segrobust/robusteval.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace segrobust;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "segrobust");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("segrobust_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  const auto b = records::read_bytes(p);
  return {b.begin(), b.end()};
}

// Small pipeline settings shared by the command tests.
std::vector<std::string> small(const fs::path& root) {
  return {"--data.dir",    (root / "data").string(), "--out_dir",         (root / "runs").string(),
          "--data.train",  "12",                     "--data.val",        "4",
          "--data.test",   "3",                      "--data.height",     "12",
          "--data.width",  "12",                     "--train.epochs",    "2",
          "--train.batch_size", "4",                 "--seed",            "3"};
}

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config resolution") {
    const auto c = cli::resolve_config(std::nullopt, {{"train.epochs", "7"}, {"attack.suite", "[\"pgd6\"]"}}, "17");
    CHECK(c["seed"] == 17);
    CHECK(c["data"]["seed"] == 17);
    CHECK(c["train"]["epochs"] == 7);
    CHECK(c["attack"]["suite"].size() == 1);
    CHECK(c["data"]["train"] == 256);
    CHECK(c["data"]["val"] == 64);
    CHECK(c["data"]["test"] == 64);
    CHECK(cli::resolve_config(std::nullopt, {{"seed", "4"}}, "17")["seed"] == 4);
    CHECK(cli::resolve_config(std::nullopt, {}, nullptr)["seed"] == 0);
    CHECK_THROWS_AS(cli::resolve_config(std::nullopt, {{"train.epochz", "1"}}, nullptr), ConfigError);
    CHECK_THROWS_AS(cli::resolve_config(std::nullopt, {}, "abc"), ConfigError);
    const auto o = cli::resolve_config(std::nullopt, {{"attack.overrides.pgd6.step_size", "0.002"}}, nullptr);
    CHECK(o["attack"]["overrides"]["pgd6"]["step_size"] == 0.002);
    const auto dotted = cli::resolve_config(std::nullopt, {{"minperturb.overrides.dag0.01.dag_max_iter", "5"}}, nullptr);
    CHECK(dotted["minperturb"]["overrides"]["dag0.01"]["dag_max_iter"] == 5);
    CHECK_THROWS_AS(cli::resolve_config(std::nullopt, {{"attack.overrides.pgd6", "1"}}, nullptr), ConfigError);
  }

  TEST_CASE("config file merging and digest") {
    const fs::path root = fresh("config");
    const std::string text = R"({"train": {"epochs": 4}, "workers": 2})";
    records::write_bytes(root / "c.json", std::vector<std::uint8_t>(text.begin(), text.end()));
    const auto c = cli::resolve_config((root / "c.json").string(), {{"train.epochs", "5"}}, nullptr);
    CHECK(c["train"]["epochs"] == 5);
    auto d = c;
    d["workers"] = 8;
    CHECK(cli::config_digest(c) == cli::config_digest(d));
    d["train"]["epochs"] = 6;
    CHECK(cli::config_digest(c) != cli::config_digest(d));
    const std::string bad = R"({"traim": {}})";
    records::write_bytes(root / "bad.json", std::vector<std::uint8_t>(bad.begin(), bad.end()));
    CHECK_THROWS_AS(cli::resolve_config((root / "bad.json").string(), {}, nullptr), ConfigError);
  }

  TEST_CASE("exit codes") {
    const fs::path root = fresh("codes");
    CHECK(run({"gen-data", "--data.dir", (root / "d").string(), "--data.train", "0"}).code == 2);
    CHECK_FALSE(fs::exists(root / "d"));
    CHECK(run({"gen-data", "--nonsense", "1"}).code == 2);
    CHECK(run({"gen-data", "--config", (root / "none.json").string()}).code == 3);
    CHECK(run({"attack", "--out_dir", (root / "r").string(), "--data.dir", (root / "d").string()}).code == 3);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run(with(small(root), {"gen-data"})).code == 2);  // flags before the subcommand are not accepted
  }

  TEST_CASE("gen-data is deterministic") {
    const fs::path root = fresh("gen");
    const auto a = run(with({"gen-data"}, small(root)));
    REQUIRE(a.code == 0);
    CHECK(a.out.find("train 12 crc32=") != std::string::npos);
    const auto b = run(with({"gen-data"}, small(root)));
    CHECK(a.out == b.out);
  }

  TEST_CASE("pipeline commands") {
    const fs::path root = fresh("pipe");
    const auto base = small(root);
    REQUIRE(run(with({"gen-data"}, base)).code == 0);
    const auto t = run(with({"train", "--model", "normal"}, base));
    REQUIRE(t.code == 0);
    CHECK(fs::exists(root / "runs/normal/model.sgrb"));
    CHECK(fs::exists(root / "runs/normal/checkpoints/epoch_002.sgrb"));
    const std::string log = slurp(root / "runs/normal/train_log.csv");
    CHECK(log.find("epoch,loss,clean_miou,robust_miou\n") != std::string::npos);

    const auto a = run(with({"attack", "--model", "normal", "--attack.suite", "[\"pgd2\"]"}, base));
    REQUIRE(a.code == 0);
    const auto rep = eval::read_report(root / "runs/normal/report.json");
    CHECK(rep.min_mean == rep.attack_means[0]);
    for (const auto& row : rep.rows) CHECK(row.min == row.scores[0]);

    const auto m = run(with({"minperturb", "--model", "normal", "--minperturb.suite", "[\"dag0.01\",\"pgd2\"]",
                             "--minperturb.bisect_steps", "3", "--minperturb.overrides.dag0.01.dag_max_iter", "5"},
                            base));
    REQUIRE(m.code == 0);
    for (const char* f : {"records.csv", "min_norm.csv", "survival_90.csv", "survival_98.csv", "survival_99.csv"})
      CHECK(fs::exists(root / "runs/normal" / f));

    const auto r = run(with({"report", "--report.models", "[\"normal\"]"}, base));
    REQUIRE(r.code == 0);
    const std::string summary = slurp(root / "runs/summary.csv");
    CHECK(summary.find("model,clean,PGD(2),MIN\n") != std::string::npos);
    CHECK(fs::exists(root / "runs/best_attacks.csv"));

    CHECK(run(with({"attack", "--model", "normal", "--attack.suite", "[\"dag0.01\"]"}, base)).code == 2);
    CHECK(run(with({"report", "--report.models", "[\"ghost\"]"}, base)).code == 3);
    CHECK(run(with({"attack", "--model", "normal", "--attack.suite", "[\"pgd2\"]", "--attack.overrides.pgd9.step_size",
                    "0.1"},
                   base))
              .code == 2);
    CHECK(run(with({"attack", "--model", "normal", "--attack.suite", "[\"pgd2\"]", "--attack.overrides.pgd2.stepsize",
                    "0.1"},
                   base))
              .code == 2);
  }

  TEST_CASE("divergence maps to the numerical exit code") {
    const fs::path root = fresh("diverge");
    const auto base = small(root);
    REQUIRE(run(with({"gen-data"}, base)).code == 0);
    CHECK(run(with({"train", "--train.lr", "1e200"}, base)).code == 4);
  }
}
