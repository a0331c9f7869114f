// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "../support/gradcheck.hpp"

#include "segrobust/advtrain.hpp"
#include "segrobust/error.hpp"

#include <doctest.h>

using namespace segrobust;
using namespace segrobust::advtrain;

namespace {

const DataSpec kTiny{12, 12, 3, 0.05};

std::size_t changed(const std::vector<LabeledExample>& a, const std::vector<LabeledExample>& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mask == b[i].mask);
    n += !bit_equal(a[i].image, b[i].image);
  }
  return n;
}

EpochLog epoch(std::size_t e, double robust) {
  EpochLog l;
  l.epoch = e;
  l.robust_miou = robust;
  return l;
}

}  // namespace

TEST_SUITE("advtrain") {
  TEST_CASE("adversarial batch fraction") {
    const Dataset d = generate(1, 16, kTiny);
    const SegModel m = SegModel::init({12, 12, 3, 16, 8}, 2);
    TrainConfig c;
    c.attack = InnerAttack::Pgd;
    const auto spec = c.inner_spec();
    CHECK_FALSE(spec.config.best_iterate);
    const attacks::Budget b{0.03, 0.0, 1.0};

    std::uint64_t generated = 0;
    CHECK(changed(d.examples, make_adversarial_batch(m, d.examples, spec, b, 0.0, 5, &generated)) == 0);
    CHECK(generated == 0);
    CHECK(changed(d.examples, make_adversarial_batch(m, d.examples, spec, b, 0.5, 5, &generated)) == 8);
    CHECK(generated == 8);
    CHECK(changed(d.examples, make_adversarial_batch(m, d.examples, spec, b, 1.0, 5, &generated)) == 16);
    const auto again = make_adversarial_batch(m, d.examples, spec, b, 0.5, 5);
    const auto same = make_adversarial_batch(m, d.examples, spec, b, 0.5, 5);
    for (std::size_t i = 0; i < 16; ++i) CHECK(bit_equal(again[i].image, same[i].image));
    CHECK_THROWS_AS(make_adversarial_batch(m, {}, spec, b, 0.5, 5), ConfigError);
  }

  TEST_CASE("adversarial count") {
    CHECK(adversarial_count(0.5, 16) == 8);
    CHECK(adversarial_count(0.3, 10) == 3);
    CHECK(adversarial_count(0.5, 5) == 3);
    CHECK(adversarial_count(1.0, 7) == 7);
    CHECK(adversarial_count(0.0, 7) == 0);
  }

  TEST_CASE("windowed epoch selection") {
    std::vector<EpochLog> log;
    const double robust[] = {0.1, 0.9, 0.2, 0.3, 0.4, 0.5};
    for (std::size_t e = 0; e < 6; ++e) log.push_back(epoch(e + 1, robust[e]));
    // Windows of 3: (0.1 .9 .2)=.4, (.9 .2 .3)=.4667, (.2 .3 .4)=.3, (.3 .4 .5)=.4
    CHECK(select_epoch(log, 3) == 4);
    CHECK(select_epoch(log, 1) == 2);
    // A window longer than the run scores only the final epoch.
    CHECK(select_epoch(log, 10) == 6);
    CHECK_THROWS_AS(select_epoch({}, 3), ConfigError);
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    c.rho = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.rho = 0.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);  // no attack
    c.attack = InnerAttack::CiraPlus;
    CHECK_NOTHROW(c.validate());
    CHECK(c.inner_spec().id == "cira+3");
    c.lr = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(parse_inner_attack("fgsm"), ConfigError);
    CHECK(parse_inner_attack("cira+") == InnerAttack::CiraPlus);
  }

  TEST_CASE("clean training is reproducible and never calls the generator") {
    const auto splits = generate_splits(3, 24, 6, 1, kTiny);
    TrainConfig c;
    c.epochs = 3;
    c.batch_size = 8;
    c.window = 2;
    c.seed = 9;
    std::vector<EpochLog> seen;
    const auto a = train(c, splits.train, splits.val, [&](const EpochLog& e, const SegModel&) { seen.push_back(e); });
    c.workers = 3;
    const auto b = train(c, splits.train, splits.val);
    CHECK(a.log.generated == 0);
    CHECK(seen.size() == 3);
    CHECK(a.log.selected_epoch >= 2);
    CHECK(a.log.selected_epoch <= 3);
    for (const auto& e : a.log.epochs) {
      CHECK(e.robust_miou == e.clean_miou);
      CHECK(std::isfinite(e.loss));
    }
    for (std::size_t i = 0; i < kParamCount; ++i) CHECK(bit_equal(a.model.params()[i].value, b.model.params()[i].value));
    CHECK(a.log.epochs.back().lr < c.lr);
  }

  TEST_CASE("adversarial training attacks every example at rho 1") {
    const auto splits = generate_splits(4, 10, 4, 1, kTiny);
    TrainConfig c;
    c.attack = InnerAttack::Pgd;
    c.rho = 1.0;
    c.epochs = 2;
    c.batch_size = 4;
    c.attack_config.iterations = 1;
    const auto r = train(c, splits.train, splits.val);
    CHECK(r.log.generated == 20);
  }

  TEST_CASE("Normal toy model reaches 0.85 clean val mIoU in 30 epochs") {
    const auto splits = generate_splits(7, 256, 32, 1, DataSpec{});
    TrainConfig c;
    c.epochs = 30;
    c.seed = 7;
    const auto r = train(c, splits.train, splits.val);
    const double clean = r.log.epochs.at(r.log.selected_epoch - 1).clean_miou;
    MESSAGE("selected epoch " << r.log.selected_epoch << ", clean val mIoU " << clean);
    CHECK(clean >= 0.85);
  }

  TEST_CASE("divergence is reported") {
    const auto splits = generate_splits(5, 8, 2, 1, kTiny);
    TrainConfig c;
    c.epochs = 5;
    c.lr = 1e200;
    CHECK_THROWS_AS(train(c, splits.train, splits.val), NumericalError);
  }
}
