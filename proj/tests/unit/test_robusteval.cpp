// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "../support/gradcheck.hpp"

#include "segrobust/error.hpp"
#include "segrobust/records.hpp"
#include "segrobust/robusteval.hpp"

#include <doctest.h>

#include <filesystem>
#include <numeric>

using namespace segrobust;
using namespace segrobust::eval;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  ModelGeometry geom = testing::small_geometry();
  SegModel model = SegModel::init(geom, 31);
  Dataset data;
  Fixture() {
    Rng rng(17);
    data.split = "test";
    data.spec = DataSpec{geom.height, geom.width, geom.classes, 0.05};
    for (int i = 0; i < 4; ++i) data.examples.push_back(testing::random_example(geom, rng));
  }
};

std::vector<attacks::AttackSpec> suite_of(std::initializer_list<const char*> ids) {
  std::vector<attacks::AttackSpec> s;
  for (const char* id : ids) s.push_back(attacks::parse_attack(id));
  return s;
}

MinPerturbRecord rec(std::size_t ex, std::size_t a, double pe, double norm) {
  MinPerturbRecord r;
  r.example = ex;
  r.attack_index = a;
  r.attack = "a" + std::to_string(a);
  r.pixel_error = pe;
  r.norm = norm;
  return r;
}

}  // namespace

TEST_SUITE("robusteval") {
  TEST_CASE("single attack: MIN equals the attack column") {
    Fixture f;
    const auto rep = run_bounded_suite(f.model, f.data, suite_of({"pgd3"}), {}, {1, 1});
    for (const auto& row : rep.rows) CHECK(row.min == row.scores[0]);
    CHECK(rep.min_mean == rep.attack_means[0]);
  }

  TEST_CASE("MIN aggregation laws and worker independence") {
    Fixture f;
    const auto suite = suite_of({"pgd2", "padam2", "cira2", "cira+2"});
    const auto rep = run_bounded_suite(f.model, f.data, suite, {}, {3, 1});
    for (const auto& row : rep.rows)
      for (double s : row.scores) CHECK(row.min <= s);
    for (double m : rep.attack_means) CHECK(rep.min_mean <= m);

    const auto par = run_bounded_suite(f.model, f.data, suite, {}, {3, 3});
    const Provenance p{"t", "d"};
    CHECK(report_to_json(rep, p).dump() == report_to_json(par, p).dump());

    auto bigger = suite;
    bigger.push_back(attacks::parse_attack("fgsm"));
    const auto more = run_bounded_suite(f.model, f.data, bigger, {}, {3, 1});
    for (std::size_t i = 0; i < rep.rows.size(); ++i) CHECK(more.rows[i].min <= rep.rows[i].min);
  }

  TEST_CASE("bounded suite rejects DAG and empty inputs") {
    Fixture f;
    CHECK_THROWS_AS(run_bounded_suite(f.model, f.data, suite_of({"dag0.003"}), {}, {}), ConfigError);
    CHECK_THROWS_AS(run_bounded_suite(f.model, f.data, {}, {}, {}), ConfigError);
  }

  TEST_CASE("minimum-perturbation search") {
    Fixture f;
    const auto spec = attacks::parse_attack("pgd5");
    const auto& ex = f.data.examples[0];
    const double clean = metrics::pixel_error(full_forward(f.model, ex.image), ex.mask);
    const auto zero = min_perturbation_search(spec, f.model, ex, clean, {}, 1);
    CHECK(zero.norm == 0.0);
    CHECK(zero.succeeded(clean));

    const double mu = std::min(1.0, clean + 0.2);
    const auto r = min_perturbation_search(spec, f.model, ex, mu, {}, 1);
    if (r.succeeded(mu)) {
      CHECK(metrics::pixel_error(full_forward(f.model, r.adversarial), ex.mask) >= mu);
      CHECK(r.norm <= 0.2);
      CHECK(max_abs_diff(r.adversarial, ex.image) == r.norm);
    }
    const auto miss = min_perturbation_search(spec, f.model, ex, 1.0, {1e-6, 4}, 1);
    if (clean < 1.0) CHECK(miss.norm_at(1.0) == kInfinity);
    CHECK_THROWS_AS(min_perturbation_search(spec, f.model, ex, 0.0, {}, 1), ConfigError);
    CHECK(0.2 * std::ldexp(1.0, -12) == doctest::Approx(4.8828125e-5));
  }

  TEST_CASE("min-perturbation suite ordering and level monotonicity") {
    Fixture f;
    auto suite = suite_of({"dag0.01", "pgd3"});
    suite[0].config.dag_max_iter = 20;
    const auto levels = std::vector<double>{0.5, 0.7, 0.9};
    const auto recs = run_min_perturb_suite(f.model, f.data, suite, levels, {0.2, 6}, {2, 1});
    REQUIRE(recs.size() == 8);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(recs[i].example == i / 2);
      CHECK(recs[i].attack_index == i % 2);
    }
    const auto a = per_example_min_norm(recs, 0.5), b = per_example_min_norm(recs, 0.7),
               c = per_example_min_norm(recs, 0.9);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].second <= b[i].second);
      CHECK(b[i].second <= c[i].second);
    }
    const auto par = run_min_perturb_suite(f.model, f.data, suite, levels, {0.2, 6}, {2, 4});
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(recs[i].norm == par[i].norm);
      CHECK(bit_equal(recs[i].adversarial, par[i].adversarial));
    }
  }

  TEST_CASE("an example no attack solves has infinite norm at every level") {
    const std::vector<MinPerturbRecord> recs = {rec(0, 0, 0.1, 0.05), rec(0, 1, 0.2, 0.07), rec(1, 0, 0.95, 0.02)};
    for (double mu : {0.9, 0.98, 0.99}) CHECK(per_example_min_norm(recs, mu)[0].second == kInfinity);
  }

  TEST_CASE("survival curves") {
    const std::vector<MinPerturbRecord> recs = {rec(0, 0, 0.99, 0.0),  rec(1, 0, 0.99, 0.02),
                                                rec(1, 1, 0.99, 0.01), rec(2, 0, 0.5, 0.01),
                                                rec(3, 0, 0.99, 0.05)};
    const auto curve = survival_curve(recs, 0.9, default_thresholds());
    REQUIRE(curve.thresholds.size() == 200);
    CHECK(curve.thresholds.front() == 0.0);
    CHECK(curve.thresholds.back() == doctest::Approx(0.1));
    CHECK(curve.fraction.front() == 0.75);  // one example already fails at norm 0
    CHECK(curve.fraction.back() == 0.25);   // the unsolved example survives everything
    for (std::size_t i = 1; i < curve.fraction.size(); ++i) CHECK(curve.fraction[i] <= curve.fraction[i - 1]);
    CHECK_THROWS_AS(survival_curve({}, 0.9, default_thresholds()), ConfigError);

    auto more = recs;
    more.push_back(rec(3, 1, 0.99, 0.001));
    const auto lower = survival_curve(more, 0.9, default_thresholds());
    for (std::size_t i = 0; i < curve.fraction.size(); ++i) CHECK(lower.fraction[i] <= curve.fraction[i]);
  }

  TEST_CASE("best-attack distribution") {
    const std::vector<MinPerturbRecord> recs = {rec(0, 0, 0.99, 0.02), rec(0, 1, 0.99, 0.01),
                                                rec(1, 0, 0.99, 0.03), rec(1, 1, 0.99, 0.03),
                                                rec(2, 0, 0.2, 0.0),   rec(2, 1, 0.99, 0.04)};
    const auto d = best_attack_distribution(recs, 0.9, 2);
    CHECK(d[0] == doctest::Approx(1.0 / 3.0));  // example 1 ties and goes to index 0
    CHECK(d[1] == doctest::Approx(2.0 / 3.0));
    CHECK(std::abs(std::accumulate(d.begin(), d.end(), 0.0) - 1.0) <= 1e-12);
    CHECK(best_attack_distribution({rec(0, 0, 0.99, 0.1)}, 0.9, 1) == std::vector<double>{1.0});
    CHECK_THROWS(best_attack_distribution({rec(0, 0, 0.5, 0.1)}, 0.9, 1));
  }

  TEST_CASE("exports") {
    const fs::path dir = fs::temp_directory_path() / "segrobust_unit_exports";
    fs::remove_all(dir);
    const Provenance prov{"0.0.1", "abcd1234"};
    Fixture f;
    const auto rep = run_bounded_suite(f.model, f.data, suite_of({"pgd2", "cira2"}), {}, {1, 1}, "toy");
    write_report(dir / "report.json", rep, prov);
    const auto back = read_report(dir / "report.json");
    CHECK(back.model == "toy");
    CHECK(back.attacks == rep.attacks);
    CHECK(back.min_mean == rep.min_mean);
    CHECK(back.rows[2].scores == rep.rows[2].scores);

    const std::vector<MinPerturbRecord> recs = {rec(0, 0, 0.99, 0.0125), rec(0, 1, 0.5, 0.2), rec(1, 0, 0.3, 0.1),
                                                rec(1, 1, 0.92, 0.04)};
    const std::vector<double> levels{0.9, 0.98, 0.99};
    write_records_csv(dir / "records.csv", recs, levels, prov);
    const auto text = records::read_bytes(dir / "records.csv");
    const std::string s(text.begin(), text.end());
    CHECK(s.find("example_id,attack_id,norm_linf,pixel_error,succ_90,succ_98,succ_99\n") != std::string::npos);
    CHECK(s.find("config_digest=abcd1234") != std::string::npos);
    const auto rr = read_records_csv(dir / "records.csv");
    REQUIRE(rr.size() == recs.size());
    for (std::size_t i = 0; i < rr.size(); ++i) {
      CHECK(rr[i].norm == recs[i].norm);
      CHECK(rr[i].pixel_error == recs[i].pixel_error);
      CHECK(rr[i].attack_index == recs[i].attack_index);
    }

    write_min_norm_csv(dir / "min_norm.csv", recs, levels, prov);
    const auto mn = records::read_bytes(dir / "min_norm.csv");
    const std::string m(mn.begin(), mn.end());
    CHECK(m.find("\n1,0.04,,\n") != std::string::npos);

    write_survival_csv(dir / "survival_90.csv", survival_curve(recs, 0.9, default_thresholds()), prov);
    const auto sv = records::read_bytes(dir / "survival_90.csv");
    CHECK(std::string(sv.begin(), sv.end()).find("visibility_landmark=0.015") != std::string::npos);
    CHECK(level_column(0.98) == "succ_98");
    CHECK_THROWS_AS(read_report(dir / "absent.json"), InputMissingError);
  }
}
