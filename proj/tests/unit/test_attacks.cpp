// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "../support/gradcheck.hpp"

#include "segrobust/attacks.hpp"
#include "segrobust/error.hpp"

#include <doctest.h>

using namespace segrobust;
using namespace segrobust::attacks;

namespace {

// w . x with its constant gradient.
class LinearObjective final : public Objective {
 public:
  explicit LinearObjective(Tensor w) : w_(std::move(w)) {}
  double evaluate(const Tensor& image, Tensor* gradient) override {
    if (gradient) *gradient = w_;
    return ops::dot(w_, image).item();
  }

 private:
  Tensor w_;
};

struct Fixture {
  ModelGeometry geom = testing::small_geometry();
  SegModel model = SegModel::init(geom, 21);
  LabeledExample ex;
  Fixture() {
    Rng rng(8);
    ex = testing::random_example(geom, rng);
  }
};

AttackConfig config(std::size_t iterations, std::uint64_t seed = 5) {
  AttackConfig c;
  c.iterations = iterations;
  c.seed = seed;
  return c;
}

bool contained(const Tensor& adv, const Tensor& x, const Budget& b) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (adv[i] < b.lower || adv[i] > b.upper) return false;
    if (std::abs(adv[i] - x[i]) > b.epsilon + 1e-12) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("attacks") {
  TEST_CASE("projection") {
    const Budget b{0.03, 0.0, 1.0};
    CHECK(project(Tensor({1}, 0.6), Tensor({1}, 0.5), b)[0] == doctest::Approx(0.53).epsilon(1e-15));
    CHECK(project(Tensor({1}, -0.2), Tensor({1}, 0.01), Budget{0.05, 0.0, 1.0})[0] == 0.0);
    const Tensor inside({2}, {0.51, 0.49});
    CHECK(bit_equal(project(inside, Tensor({2}, 0.5), b), inside));
  }

  TEST_CASE("linear objective: one signed step reaches the box corner") {
    Rng rng(1);
    // Dyadic values keep x +- eps exact.
    Tensor x({64}), w({64});
    for (std::size_t i = 0; i < 64; ++i) {
      x[i] = 0.25 + 0.5 * static_cast<double>(rng.below(64)) / 64.0;
      w[i] = (rng.below(2) ? 1.0 : -1.0) * (1 + rng.below(8)) / 8.0;
    }
    const Budget b{1.0 / 32.0, 0.0, 1.0};
    LinearObjective obj(w);
    const Tensor adv = fgsm_step(obj, x, b);
    double l1 = 0.0;
    for (std::size_t i = 0; i < 64; ++i) {
      CHECK(adv[i] - x[i] == b.epsilon * (w[i] > 0 ? 1.0 : -1.0));
      l1 += std::abs(w[i]);
    }
    CHECK(std::abs(obj.evaluate(adv, nullptr) - obj.evaluate(x, nullptr) - b.epsilon * l1) < 1e-9);

    const auto pgd_out = projected_ascent(obj, x, b, {StepRule::Signed, 10, 0.01, true, 1, 0});
    CHECK(bit_equal(pgd_out.image, adv));
  }

  TEST_CASE("epsilon 0 leaves the image unchanged") {
    Fixture f;
    const Budget zero{0.0, 0.0, 1.0};
    CHECK(bit_equal(fgsm(f.model, f.ex, zero).adversarial, f.ex.image));
    CHECK(bit_equal(padam(f.model, f.ex, zero, config(4)).adversarial, f.ex.image));
    const auto c = cira(f.model, f.ex, zero, config(4));
    CHECK(bit_equal(c.adversarial, f.ex.image));
    const double cs0 = metrics::cos_sim(backbone_forward(f.model, f.ex.image), random_target(f.geom, 5));
    CHECK(c.objective == doctest::Approx(cs0).epsilon(1e-14));
  }

  TEST_CASE("one PGD step of size eps equals FGSM") {
    Fixture f;
    const Budget b{0.03, 0.0, 1.0};
    AttackConfig c = config(1);
    c.step_size = b.epsilon;
    c.best_iterate = false;
    CHECK(bit_equal(pgd(f.model, f.ex, b, c).adversarial, fgsm(f.model, f.ex, b).adversarial));
    c.best_iterate = true;
    const auto r = pgd(f.model, f.ex, b, c);
    REQUIRE(r.objective_trace.size() == 2);
    if (r.objective_trace[1] >= r.objective_trace[0])
      CHECK(bit_equal(r.adversarial, fgsm(f.model, f.ex, b).adversarial));
  }

  TEST_CASE("CIRA+ special cases") {
    Fixture f;
    const Budget b{0.03, 0.0, 1.0};
    AttackConfig c = config(6, 77);
    c.mix_weight = 1.0;
    const auto plus1 = cira_plus(f.model, f.ex, b, c);
    const auto pa = padam(f.model, f.ex, b, c);
    CHECK(bit_equal(plus1.adversarial, pa.adversarial));
    CHECK(plus1.objective_trace == pa.objective_trace);
    c.mix_weight = 0.0;
    const auto plus0 = cira_plus(f.model, f.ex, b, c);
    const auto ci = cira(f.model, f.ex, b, c);
    CHECK(plus0.objective_trace == ci.objective_trace);
    CHECK(bit_equal(plus0.adversarial, ci.adversarial));
  }

  TEST_CASE("CIRA never evaluates the head while optimizing") {
    Fixture f;
    Rng rng(3);
    const Budget b{0.03, 0.0, 1.0};
    const auto r = cira(f.model, f.ex, b, config(7));
    CHECK(r.optimization.head == 0);
    CHECK(r.optimization.head_param_reads == 0);
    // Seven gradient evaluations plus the scoring of the final iterate.
    CHECK(r.optimization.backbone == 8);
    CHECK(r.total.head == 1);
    const auto t = cira_targeted(f.model, f.ex, testing::random_example(f.geom, rng).image, b, config(7));
    CHECK(t.optimization.head == 0);
    CHECK(t.optimization.head_param_reads == 0);
  }

  TEST_CASE("targeted CIRA") {
    Fixture f;
    Rng rng(4);
    const Tensor other = testing::random_example(f.geom, rng).image;
    CHECK_THROWS_AS(cira_targeted(f.model, f.ex, f.ex.image, {}, config(2)), ConfigError);
    const auto z = cira_targeted(f.model, f.ex, other, Budget{0.0, 0.0, 1.0}, config(3));
    CHECK(bit_equal(z.adversarial, f.ex.image));
    CHECK(z.objective == doctest::Approx(metrics::cos_sim(backbone_forward(f.model, f.ex.image),
                                                          backbone_forward(f.model, other)))
                             .epsilon(1e-14));
    const auto r = cira_targeted(f.model, f.ex, other, Budget{0.03, 0.0, 1.0}, config(30));
    CHECK(r.objective >= r.objective_trace.front());
  }

  TEST_CASE("targeted CIRA+") {
    Fixture f;
    Rng rng(6);
    const LabeledExample target = testing::random_example(f.geom, rng);
    CHECK(bit_equal(cira_plus_targeted(f.model, f.ex, target, Budget{0.0, 0.0, 1.0}, config(3)).adversarial,
                    f.ex.image));
    AttackConfig c = config(20);
    c.mix_weight = 1.0;
    const auto r = cira_plus_targeted(f.model, f.ex, target, Budget{0.03, 0.0, 1.0}, c);
    CHECK(r.optimization.feature_terms == 0);
    REQUIRE(r.target_agreement.has_value());
    CHECK(*r.target_agreement >= metrics::agreement(full_forward(f.model, f.ex.image), target.mask));
    CHECK_THROWS_AS(cira_plus_targeted(f.model, f.ex, f.ex, {}, c), ConfigError);
  }

  TEST_CASE("DAG") {
    Fixture f;
    AttackConfig c = config(1);
    c.dag_step_size = 0.003;
    c.dag_max_iter = 25;
    const double clean_pe = metrics::pixel_error(full_forward(f.model, f.ex.image), f.ex.mask);
    const auto done = dag(f.model, f.ex, c, clean_pe);
    CHECK(done.iterations == 0);
    CHECK(done.linf == 0.0);
    CHECK(done.success);
    const auto r = dag(f.model, f.ex, c, 1.0);
    CHECK(r.linf <= c.dag_step_size * static_cast<double>(r.iterations) + 1e-12);
    CHECK(r.iterations <= 25);
    for (double v : r.adversarial.values()) CHECK((v >= 0.0 && v <= 1.0));
  }

  TEST_CASE("bounded attacks stay in the budget") {
    Fixture f;
    Rng rng(12);
    for (int i = 0; i < 40; ++i) {
      const Budget b{rng.uniform(0.0, 0.1), 0.0, 1.0};
      const char* ids[] = {"fgsm", "pgd3", "padam3", "cira3", "cira+3"};
      const auto spec = parse_attack(ids[i % 5]);
      const auto r = run_attack(spec, f.model, f.ex, b, rng.next());
      CAPTURE(spec.id);
      CHECK(contained(r.adversarial, f.ex.image, b));
      CHECK(r.linf <= b.epsilon + 1e-12);
    }
  }

  TEST_CASE("restarts start inside the ball and keep the best") {
    Fixture f;
    AttackConfig c = config(3);
    c.restarts = 3;
    const Budget b{0.03, 0.0, 1.0};
    const auto r = pgd(f.model, f.ex, b, c);
    CHECK(r.objective_trace.size() == 12);
    CHECK(r.objective == *std::max_element(r.objective_trace.begin(), r.objective_trace.end()));
    CHECK(contained(r.adversarial, f.ex.image, b));
  }

  TEST_CASE("attack ids") {
    CHECK(parse_attack("pgd120").config.iterations == 120);
    CHECK(parse_attack("cira+3").kind == AttackKind::CiraPlus);
    CHECK(parse_attack("cira3").kind == AttackKind::Cira);
    CHECK(parse_attack("padam6").kind == AttackKind::PAdam);
    CHECK(parse_attack("dag0.001").config.dag_step_size == 0.001);
    CHECK(display_name(parse_attack("pgd6")) == "PGD(6)");
    CHECK(display_name(parse_attack("cira+120")) == "CIRA+(120)");
    CHECK(display_name(parse_attack("dag0.003")) == "DAG(0.003)");
    CHECK_FALSE(is_bounded(AttackKind::Dag));
    for (const char* bad : {"pgd", "pgd0", "pgdx", "dag", "dag-1", "foo"}) CHECK_THROWS_AS(parse_attack(bad), ConfigError);
  }

  TEST_CASE("config validation") {
    AttackConfig c;
    c.mix_weight = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = AttackConfig{};
    c.adam_lr = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    Fixture f;
    CHECK_THROWS_AS(pgd(f.model, f.ex, Budget{-0.1, 0.0, 1.0}, config(1)), ConfigError);
  }
}
