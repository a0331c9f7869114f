// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "segrobust/error.hpp"
#include "segrobust/records.hpp"
#include "segrobust/robusteval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace segrobust::eval {

using nlohmann::json;

namespace {

double read_number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    throw FormatError("unexpected string '" + s + "' where a number was expected");
  }
  return j.get<double>();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  records::write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = records::read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

std::string provenance_comment(const Provenance& p) {
  return "# segrobust " + p.version + " config_digest=" + p.config_digest + "\n";
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_number(double v) {
  // Shortest text that reads back to the same double.
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string level_column(double mu) {
  const long pct = std::lround(mu * 100.0);
  return "succ_" + std::to_string(pct);
}

json report_to_json(const EvalReport& report, const Provenance& provenance) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json scores = json::object();
    for (std::size_t a = 0; a < report.attacks.size(); ++a) scores[report.attacks[a]] = r.scores.at(a);
    rows.push_back({{"example", r.example}, {"clean", r.clean}, {"scores", scores}, {"min", r.min}});
  }
  json attack_means = json::object();
  for (std::size_t a = 0; a < report.attacks.size(); ++a) attack_means[report.attacks[a]] = report.attack_means.at(a);
  return {
      {"version", provenance.version},
      {"config_digest", provenance.config_digest},
      {"model", report.model},
      {"suite", report.attacks},
      {"budget", {{"epsilon", report.budget.epsilon}, {"lower", report.budget.lower}, {"upper", report.budget.upper}}},
      {"rows", rows},
      {"means", {{"clean", report.clean_mean}, {"attacks", attack_means}, {"min", report.min_mean}}},
  };
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport rep;
    rep.model = j.at("model").get<std::string>();
    rep.attacks = j.at("suite").get<std::vector<std::string>>();
    const auto& b = j.at("budget");
    rep.budget = attacks::Budget{b.at("epsilon").get<double>(), b.at("lower").get<double>(), b.at("upper").get<double>()};
    for (const auto& r : j.at("rows")) {
      EvalRow row;
      row.example = r.at("example").get<std::size_t>();
      row.clean = read_number(r.at("clean"));
      for (const auto& a : rep.attacks) row.scores.push_back(read_number(r.at("scores").at(a)));
      row.min = read_number(r.at("min"));
      rep.rows.push_back(std::move(row));
    }
    const auto& m = j.at("means");
    rep.clean_mean = read_number(m.at("clean"));
    for (const auto& a : rep.attacks) rep.attack_means.push_back(read_number(m.at("attacks").at(a)));
    rep.min_mean = read_number(m.at("min"));
    return rep;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

void write_report(const std::filesystem::path& path, const EvalReport& report, const Provenance& provenance) {
  write_text(path, report_to_json(report, provenance).dump(2) + "\n");
}

EvalReport read_report(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

void write_records_csv(const std::filesystem::path& path, const std::vector<MinPerturbRecord>& records,
                       const std::vector<double>& levels, const Provenance& provenance) {
  std::ostringstream out;
  out << provenance_comment(provenance);
  out << "example_id,attack_id,norm_linf,pixel_error";
  for (double mu : levels) out << ',' << level_column(mu);
  out << '\n';
  for (const auto& r : records) {
    out << r.example << ',' << r.attack << ',' << format_number(r.norm) << ',' << format_number(r.pixel_error);
    for (double mu : levels) out << ',' << (r.succeeded(mu) ? 1 : 0);
    out << '\n';
  }
  write_text(path, out.str());
}

std::vector<MinPerturbRecord> read_records_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  bool header = false;
  std::vector<std::string> attack_order;
  std::vector<MinPerturbRecord> out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("example_id,attack_id,norm_linf,pixel_error", 0) != 0)
        throw FormatError(path.string() + ": unexpected records header");
      header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() < 4) throw FormatError(path.string() + ": short records row");
    MinPerturbRecord r;
    try {
      r.example = std::stoull(cells[0]);
      r.norm = std::stod(cells[2]);
      r.pixel_error = std::stod(cells[3]);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": bad number in row '" + line + "'");
    }
    r.attack = cells[1];
    // Rows are written in suite order per example, so first appearance fixes the index.
    auto it = std::find(attack_order.begin(), attack_order.end(), r.attack);
    r.attack_index = static_cast<std::size_t>(it - attack_order.begin());
    if (it == attack_order.end()) attack_order.push_back(r.attack);
    out.push_back(std::move(r));
  }
  if (!header) throw FormatError(path.string() + ": missing records header");
  return out;
}

void write_survival_csv(const std::filesystem::path& path, const SurvivalCurve& curve, const Provenance& provenance) {
  std::ostringstream out;
  out << provenance_comment(provenance);
  out << "# level=" << format_number(curve.mu) << " visibility_landmark=" << format_number(kVisibilityLandmark) << '\n';
  out << "threshold,fraction\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
    out << format_number(curve.thresholds[i]) << ',' << format_number(curve.fraction.at(i)) << '\n';
  write_text(path, out.str());
}

void write_min_norm_csv(const std::filesystem::path& path, const std::vector<MinPerturbRecord>& records,
                        const std::vector<double>& levels, const Provenance& provenance) {
  std::vector<std::vector<std::pair<std::size_t, double>>> columns;
  for (double mu : levels) columns.push_back(per_example_min_norm(records, mu));
  std::ostringstream out;
  out << provenance_comment(provenance);
  out << "example_id";
  for (double mu : levels) out << ",min_norm_" << std::lround(mu * 100.0);
  out << '\n';
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    out << columns.front()[i].first;
    for (const auto& col : columns) {
      out << ',';
      if (!std::isinf(col[i].second)) out << format_number(col[i].second);
    }
    out << '\n';
  }
  write_text(path, out.str());
}

}  // namespace segrobust::eval
