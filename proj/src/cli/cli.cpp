// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/cli.hpp"

#include "segrobust/advtrain.hpp"
#include "segrobust/error.hpp"
#include "segrobust/records.hpp"
#include "segrobust/robusteval.hpp"
#include "segrobust/version.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace segrobust::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---- config plumbing -------------------------------------------------------

void merge_into(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    // Per-attack overrides are free-form.
    const bool open = prefix == "attack.overrides" || prefix == "minperturb.overrides";
    if (!base.contains(key) && !open) throw ConfigError("unknown config key '" + path + "'");
    if (base.contains(key) && base[key].is_object() && !open) {
      merge_into(base[key], value, path);
    } else {
      base[key] = value;
    }
  }
}

void set_dotted(json& config, const std::string& dotted, const json& value) {
  json* node = &config;
  std::string prefix;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("malformed flag '--" + dotted + "'");
    if (!node->is_object()) throw ConfigError("'" + prefix + "' is not a section");
    if (prefix == "attack.overrides" || prefix == "minperturb.overrides") {
      // Attack ids may contain dots ("dag0.003"), so the field is the last part.
      const std::string rest = dotted.substr(start);
      const std::size_t last = rest.rfind('.');
      if (last == std::string::npos || last == 0 || last + 1 == rest.size())
        throw ConfigError("override flags look like --" + prefix + ".<attack id>.<field>");
      json& entry = (*node)[rest.substr(0, last)];
      if (!entry.is_object()) entry = json::object();
      entry[rest.substr(last + 1)] = value;
      return;
    }
    if (!node->contains(key)) throw ConfigError("unknown config key '" + dotted + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    prefix = prefix.empty() ? key : prefix + "." + key;
    start = dot + 1;
  }
}

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

template <typename T>
T get(const json& config, const std::string& dotted) {
  const json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw ConfigError("missing config key '" + dotted + "'");
    node = &node->at(key);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!node->is_number_unsigned()) {
        if (node->is_number_integer() && node->get<std::int64_t>() >= 0) return node->get<T>();
        throw ConfigError("config key '" + dotted + "' must be a non-negative integer");
      }
    } else if constexpr (std::is_same_v<T, double>) {
      if (!node->is_number()) throw ConfigError("config key '" + dotted + "' must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!node->is_string()) throw ConfigError("config key '" + dotted + "' must be a string");
    }
    return node->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + dotted + "': " + e.what());
  }
}

struct Context {
  json config;
  eval::Provenance provenance;
  std::uint64_t seed;
  std::size_t workers;
  fs::path out_dir;
  std::string model;
};

Context make_context(const json& config) {
  Context ctx;
  ctx.config = config;
  ctx.provenance = {kVersion, config_digest(config)};
  ctx.seed = get<std::uint64_t>(config, "seed");
  ctx.workers = get<std::size_t>(config, "workers");
  if (ctx.workers == 0) throw ConfigError("workers must be positive");
  ctx.out_dir = get<std::string>(config, "out_dir");
  ctx.model = get<std::string>(config, "model");
  if (ctx.model.empty() || ctx.model.find('/') != std::string::npos)
    throw ConfigError("model must be a plain non-empty name");
  return ctx;
}

fs::path model_dir(const Context& ctx, const std::string& name) { return ctx.out_dir / name; }

fs::path split_path(const json& config, const std::string& split) {
  if (split != "train" && split != "val" && split != "test")
    throw ConfigError("split must be train, val or test, not '" + split + "'");
  return fs::path(get<std::string>(config, "data.dir")) / (split + ".sgrb");
}

DataSpec data_spec(const json& config) {
  DataSpec spec;
  spec.height = get<std::size_t>(config, "data.height");
  spec.width = get<std::size_t>(config, "data.width");
  spec.classes = get<std::size_t>(config, "data.classes");
  spec.void_fraction = get<double>(config, "data.void_fraction");
  return spec;
}

std::string provenance_comment(const eval::Provenance& p) {
  return "# segrobust " + p.version + " config_digest=" + p.config_digest + "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  records::write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

attacks::AttackConfig attack_defaults(const json& config, const std::string& section) {
  attacks::AttackConfig c;
  c.step_size = get<double>(config, section + ".step_size");
  c.adam_lr = get<double>(config, section + ".adam_lr");
  c.mix_weight = get<double>(config, section + ".mix_weight");
  c.restarts = get<std::size_t>(config, section + ".restarts");
  return c;
}

std::vector<attacks::AttackSpec> parse_suite(const json& config, const std::string& section) {
  const auto ids = config.at(section).at("suite");
  if (!ids.is_array() || ids.empty()) throw ConfigError(section + ".suite must be a non-empty list of attack ids");
  const auto defaults = attack_defaults(config, section);
  const json& overrides = config.at(section).at("overrides");
  if (!overrides.is_object()) throw ConfigError(section + ".overrides must be an object");
  std::vector<attacks::AttackSpec> suite;
  for (const auto& id : ids) {
    if (!id.is_string()) throw ConfigError(section + ".suite entries must be strings");
    auto spec = attacks::parse_attack(id.get<std::string>(), defaults);
    if (overrides.contains(spec.id)) {
      const json& o = overrides.at(spec.id);
      json fields = {{"step_size", spec.config.step_size},   {"adam_lr", spec.config.adam_lr},
                     {"mix_weight", spec.config.mix_weight}, {"restarts", spec.config.restarts},
                     {"dag_max_iter", spec.config.dag_max_iter}};
      merge_into(fields, o, section + ".overrides." + spec.id);
      spec.config.step_size = get<double>(fields, "step_size");
      spec.config.adam_lr = get<double>(fields, "adam_lr");
      spec.config.mix_weight = get<double>(fields, "mix_weight");
      spec.config.restarts = get<std::size_t>(fields, "restarts");
      spec.config.dag_max_iter = get<std::size_t>(fields, "dag_max_iter");
    }
    spec.config.validate();
    for (const auto& prior : suite)
      if (prior.id == spec.id) throw ConfigError("attack '" + spec.id + "' listed twice");
    suite.push_back(std::move(spec));
  }
  for (const auto& [id, value] : overrides.items()) {
    const bool listed = std::any_of(suite.begin(), suite.end(), [&](const auto& s) { return s.id == id; });
    if (!listed) throw ConfigError(section + ".overrides names '" + id + "', which is not in the suite");
  }
  return suite;
}

std::vector<double> parse_levels(const json& config) {
  const auto& l = config.at("minperturb").at("levels");
  if (!l.is_array() || l.empty()) throw ConfigError("minperturb.levels must be a non-empty list");
  std::vector<double> levels;
  for (const auto& v : l) {
    if (!v.is_number()) throw ConfigError("minperturb.levels entries must be numbers");
    const double mu = v.get<double>();
    if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("pixel-error levels must be in (0, 1]");
    levels.push_back(mu);
  }
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(levels[i] > levels[i - 1])) throw ConfigError("minperturb.levels must be strictly increasing");
  return levels;
}

advtrain::TrainConfig train_config(const json& config, std::uint64_t seed, std::size_t workers) {
  advtrain::TrainConfig t;
  t.attack = advtrain::parse_inner_attack(get<std::string>(config, "train.attack"));
  t.attack_config.iterations = get<std::size_t>(config, "train.iterations");
  t.attack_config.step_size = get<double>(config, "train.step_size");
  t.attack_config.adam_lr = get<double>(config, "train.adam_lr");
  t.attack_config.mix_weight = get<double>(config, "train.mix_weight");
  t.epsilon = get<double>(config, "train.epsilon");
  t.rho = get<double>(config, "train.rho");
  t.batch_size = get<std::size_t>(config, "train.batch_size");
  t.epochs = get<std::size_t>(config, "train.epochs");
  t.lr = get<double>(config, "train.lr");
  t.lr_power = get<double>(config, "train.lr_power");
  t.weight_decay = get<double>(config, "train.weight_decay");
  t.momentum = get<double>(config, "train.momentum");
  t.window = get<std::size_t>(config, "train.window");
  t.seed = seed;
  t.workers = workers;
  t.validate();
  return t;
}

Checkpoint load_model(const Context& ctx) {
  const fs::path path = model_dir(ctx, ctx.model) / "model.sgrb";
  return load_checkpoint(path);
}

std::string short_number(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

}  // namespace

json default_config() {
  return {
      {"seed", nullptr},
      {"workers", 1},
      {"out_dir", "runs"},
      {"model", "model"},
      {"data",
       {{"dir", "data"},
        {"seed", nullptr},
        {"train", 256},
        {"val", 64},
        {"test", 64},
        {"height", 32},
        {"width", 32},
        {"classes", 4},
        {"void_fraction", 0.05}}},
      {"train",
       {{"attack", "none"},
        {"rho", 0.0},
        {"iterations", 3},
        {"step_size", 0.01},
        {"adam_lr", 0.01},
        {"mix_weight", 0.5},
        {"epsilon", 0.03},
        {"batch_size", 16},
        {"epochs", 30},
        {"lr", 0.01},
        {"lr_power", 0.9},
        {"weight_decay", 1e-4},
        {"momentum", 0.9},
        {"window", 10}}},
      {"attack",
       {{"split", "test"},
        {"suite", eval::default_bounded_suite()},
        {"epsilon", 0.03},
        {"step_size", 0.01},
        {"adam_lr", 0.01},
        {"mix_weight", 0.5},
        {"restarts", 1},
        {"overrides", json::object()}}},
      {"minperturb",
       {{"split", "test"},
        {"suite", eval::default_min_perturb_suite()},
        {"levels", eval::default_levels()},
        {"eps_hi", 0.2},
        {"bisect_steps", 12},
        {"step_size", 0.01},
        {"adam_lr", 0.01},
        {"mix_weight", 0.5},
        {"restarts", 1},
        {"overrides", json::object()}}},
      {"report", {{"models", json::array()}, {"levels", eval::default_levels()}}},
  };
}

json resolve_config(const std::optional<std::string>& config_path,
                    const std::vector<std::pair<std::string, std::string>>& overrides, const char* env_seed) {
  json config = default_config();
  if (config_path) {
    const auto bytes = records::read_bytes(*config_path);
    json file;
    try {
      file = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
      throw ConfigError(*config_path + ": " + e.what());
    }
    merge_into(config, file, "");
  }
  for (const auto& [key, value] : overrides) set_dotted(config, key, parse_value(value));
  if (config["seed"].is_null()) {
    std::uint64_t seed = 0;
    if (env_seed && *env_seed) {
      try {
        std::size_t used = 0;
        seed = std::stoull(env_seed, &used);
        if (used != std::string(env_seed).size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ConfigError(std::string("SEGROBUST_SEED is not an unsigned integer: '") + env_seed + "'");
      }
    }
    config["seed"] = seed;
  }
  if (config["data"]["seed"].is_null()) config["data"]["seed"] = config["seed"];
  return config;
}

std::string config_digest(const json& config) {
  json c = config;
  c.erase("workers");
  const std::string text = c.dump();
  return hex32(records::crc32(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size())));
}

void cmd_gen_data(const json& config, std::ostream& out) {
  make_context(config);
  const DataSpec spec = data_spec(config);
  const std::uint64_t seed = get<std::uint64_t>(config, "data.seed");
  const std::size_t counts[3] = {get<std::size_t>(config, "data.train"), get<std::size_t>(config, "data.val"),
                                 get<std::size_t>(config, "data.test")};
  const char* names[3] = {"train", "val", "test"};
  for (int s = 0; s < 3; ++s)
    if (counts[s] == 0) throw ConfigError(std::string("data.") + names[s] + " must be at least 1");
  // Generate everything first so that a bad spec writes nothing.
  const DataSplits splits = generate_splits(seed, counts[0], counts[1], counts[2], spec);
  const Dataset* sets[3] = {&splits.train, &splits.val, &splits.test};
  for (int s = 0; s < 3; ++s) {
    const fs::path path = split_path(config, names[s]);
    save_dataset(*sets[s], path);
    const auto bytes = records::read_bytes(path);
    out << names[s] << ' ' << sets[s]->size() << " crc32=" << hex32(records::crc32(bytes)) << ' '
        << path.string() << '\n';
  }
}

void cmd_train(const json& config, std::ostream& out) {
  const Context ctx = make_context(config);
  const advtrain::TrainConfig tc = train_config(config, ctx.seed, ctx.workers);
  const Dataset train_set = load_dataset(split_path(config, "train"));
  const Dataset val_set = load_dataset(split_path(config, "val"));
  const fs::path dir = model_dir(ctx, ctx.model);
  const json meta_base = {{"name", ctx.model},
                          {"version", ctx.provenance.version},
                          {"config_digest", ctx.provenance.config_digest},
                          {"train", config.at("train")}};

  std::ostringstream log_csv;
  log_csv << provenance_comment(ctx.provenance) << "epoch,loss,clean_miou,robust_miou\n";
  auto result = advtrain::train(tc, train_set, val_set, [&](const advtrain::EpochLog& e, const SegModel& m) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%03zu.sgrb", e.epoch);
    json meta = meta_base;
    meta["epoch"] = e.epoch;
    save_checkpoint(m, dir / "checkpoints" / name, meta);
    log_csv << e.epoch << ',' << eval::format_number(e.loss) << ',' << eval::format_number(e.clean_miou) << ','
            << eval::format_number(e.robust_miou) << '\n';
    out << "epoch " << e.epoch << " loss " << short_number(e.loss) << " clean " << short_number(e.clean_miou)
        << " robust " << short_number(e.robust_miou) << '\n';
  });
  log_csv << "# selected_epoch=" << result.log.selected_epoch << '\n';
  json meta = meta_base;
  meta["epoch"] = result.log.selected_epoch;
  save_checkpoint(result.model, dir / "model.sgrb", meta);
  write_text(dir / "train_log.csv", log_csv.str());
  out << "selected epoch " << result.log.selected_epoch << " -> " << (dir / "model.sgrb").string() << '\n';
}

void cmd_attack(const json& config, std::ostream& out) {
  const Context ctx = make_context(config);
  const auto suite = parse_suite(config, "attack");
  for (const auto& s : suite)
    if (!attacks::is_bounded(s.kind)) throw ConfigError("attack '" + s.id + "' is not a bounded attack");
  const double eps = get<double>(config, "attack.epsilon");
  if (!(eps > 0.0)) throw ConfigError("attack.epsilon must be positive");
  const Dataset data = load_dataset(split_path(config, get<std::string>(config, "attack.split")));
  const Checkpoint ck = load_model(ctx);
  const auto report = eval::run_bounded_suite(ck.model, data, suite, attacks::Budget{eps, 0.0, 1.0},
                                              {ctx.seed, ctx.workers}, ctx.model);
  eval::write_report(model_dir(ctx, ctx.model) / "report.json", report, ctx.provenance);
  out << ctx.model << " clean " << short_number(report.clean_mean);
  for (std::size_t a = 0; a < suite.size(); ++a)
    out << ' ' << attacks::display_name(suite[a]) << ' ' << short_number(report.attack_means[a]);
  out << " MIN " << short_number(report.min_mean) << '\n';
}

void cmd_minperturb(const json& config, std::ostream& out) {
  const Context ctx = make_context(config);
  const auto suite = parse_suite(config, "minperturb");
  const auto levels = parse_levels(config);
  eval::SearchOptions search;
  search.eps_hi = get<double>(config, "minperturb.eps_hi");
  search.bisect_steps = get<std::size_t>(config, "minperturb.bisect_steps");
  if (!(search.eps_hi > 0.0)) throw ConfigError("minperturb.eps_hi must be positive");
  const Dataset data = load_dataset(split_path(config, get<std::string>(config, "minperturb.split")));
  const Checkpoint ck = load_model(ctx);
  const auto records =
      eval::run_min_perturb_suite(ck.model, data, suite, levels, search, {ctx.seed, ctx.workers});
  const fs::path dir = model_dir(ctx, ctx.model);
  eval::write_records_csv(dir / "records.csv", records, levels, ctx.provenance);
  eval::write_min_norm_csv(dir / "min_norm.csv", records, levels, ctx.provenance);
  for (double mu : levels) {
    const auto curve = eval::survival_curve(records, mu, eval::default_thresholds());
    eval::write_survival_csv(dir / ("survival_" + std::to_string(std::lround(mu * 100)) + ".csv"), curve,
                             ctx.provenance);
    const auto mins = eval::per_example_min_norm(records, mu);
    const auto solved = std::count_if(mins.begin(), mins.end(), [](const auto& p) { return !std::isinf(p.second); });
    out << ctx.model << " level " << short_number(mu) << " solved " << solved << '/' << mins.size() << '\n';
  }
}

void cmd_report(const json& config, std::ostream& out) {
  const Context ctx = make_context(config);
  const auto& models = config.at("report").at("models");
  if (!models.is_array() || models.empty()) throw ConfigError("report.models must be a non-empty list of model names");
  std::vector<double> levels;
  for (const auto& v : config.at("report").at("levels")) {
    if (!v.is_number()) throw ConfigError("report.levels entries must be numbers");
    levels.push_back(v.get<double>());
  }
  std::vector<std::string> names;
  for (const auto& m : models) {
    if (!m.is_string()) throw ConfigError("report.models entries must be strings");
    names.push_back(m.get<std::string>());
  }

  std::vector<eval::EvalReport> reports;
  for (const auto& n : names) reports.push_back(eval::read_report(model_dir(ctx, n) / "report.json"));
  const auto& suite = reports.front().attacks;
  for (const auto& r : reports)
    if (r.attacks != suite) throw ConfigError("reports '" + names.front() + "' and '" + r.model + "' use different suites");

  std::ostringstream table;
  table << provenance_comment(ctx.provenance) << "model,clean";
  for (const auto& id : suite) table << ',' << attacks::display_name(attacks::parse_attack(id));
  table << ",MIN\n";
  out << std::left << std::setw(16) << "model" << std::setw(10) << "clean";
  for (const auto& id : suite) out << std::setw(14) << attacks::display_name(attacks::parse_attack(id));
  out << "MIN\n";
  for (std::size_t m = 0; m < reports.size(); ++m) {
    const auto& r = reports[m];
    table << names[m] << ',' << eval::format_number(r.clean_mean);
    out << std::setw(16) << names[m] << std::setw(10) << short_number(r.clean_mean);
    for (std::size_t a = 0; a < suite.size(); ++a) {
      table << ',' << eval::format_number(r.attack_means[a]);
      out << std::setw(14) << short_number(r.attack_means[a]);
    }
    table << ',' << eval::format_number(r.min_mean) << '\n';
    out << short_number(r.min_mean) << '\n';
  }
  write_text(ctx.out_dir / "summary.csv", table.str());

  // Best-attack histogram, for every model that has min-perturbation records.
  std::ostringstream hist;
  hist << provenance_comment(ctx.provenance) << "model,level,attack_id,proportion\n";
  bool any = false;
  for (const auto& n : names) {
    const fs::path path = model_dir(ctx, n) / "records.csv";
    if (!fs::exists(path)) continue;
    any = true;
    const auto recs = eval::read_records_csv(path);
    std::vector<std::string> order;
    for (const auto& r : recs)
      if (r.attack_index == order.size()) order.push_back(r.attack);
    for (double mu : levels) {
      std::vector<double> share;
      try {
        share = eval::best_attack_distribution(recs, mu, order.size());
      } catch (const ConfigError&) {
        throw;
      } catch (const Error&) {
        share.clear();  // nothing succeeded at this level
      }
      for (std::size_t a = 0; a < order.size(); ++a) {
        hist << n << ',' << eval::format_number(mu) << ',' << order[a] << ',';
        if (!share.empty()) hist << eval::format_number(share[a]);
        hist << '\n';
      }
    }
  }
  if (any) write_text(ctx.out_dir / "best_attacks.csv", hist.str());
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robustness evaluation toolkit for segmentation models"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  const std::pair<const char*, const char*> commands[] = {
      {"gen-data", "Generate the synthetic train/val/test splits"},
      {"train", "Train a model, optionally with adversarial batches"},
      {"attack", "Run the bounded attack suite and write a report"},
      {"minperturb", "Run the minimum-perturbation suite"},
      {"report", "Merge model reports into a summary table"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file");
    sub->allow_extras();
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  CLI::App* chosen = nullptr;
  for (auto* s : subs)
    if (s->parsed()) chosen = s;
  try {
    std::vector<std::pair<std::string, std::string>> overrides;
    const auto extras = chosen->remaining();
    for (std::size_t i = 0; i < extras.size(); ++i) {
      const std::string& flag = extras[i];
      if (flag.rfind("--", 0) != 0 || flag.size() < 3) throw ConfigError("unexpected argument '" + flag + "'");
      const auto eq = flag.find('=');
      if (eq != std::string::npos) {
        overrides.emplace_back(flag.substr(2, eq - 2), flag.substr(eq + 1));
      } else {
        if (i + 1 >= extras.size()) throw ConfigError("flag '" + flag + "' needs a value");
        overrides.emplace_back(flag.substr(2), extras[++i]);
      }
    }
    const json config = resolve_config(config_path, overrides, std::getenv("SEGROBUST_SEED"));
    const std::string name = chosen->get_name();
    if (name == "gen-data") cmd_gen_data(config, out);
    if (name == "train") cmd_train(config, out);
    if (name == "attack") cmd_attack(config, out);
    if (name == "minperturb") cmd_minperturb(config, out);
    if (name == "report") cmd_report(config, out);
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InputMissingError& e) {
    err << "missing input: " << e.what() << '\n';
    return kInputMissing;
  } catch (const FormatError& e) {
    err << "unreadable input: " << e.what() << '\n';
    return kInputMissing;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace segrobust::cli
