// Copyright (c) 2026 The segrobust Authors
// SPDX-License-Identifier: Apache-2.0

#include "../support/gradcheck.hpp"

#include "segrobust/error.hpp"
#include "segrobust/graph.hpp"
#include "segrobust/ops.hpp"
#include "segrobust/optim.hpp"
#include "segrobust/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace segrobust;

TEST_SUITE("numcore") {
  TEST_CASE("relu clips negatives") {
    const Tensor out = ops::relu(Tensor({3}, {-1.0, 0.0, 2.0}));
    CHECK(out.values() == std::vector<double>{0.0, 0.0, 2.0});
  }

  TEST_CASE("softmax of equal logits is uniform") {
    const Tensor p = ops::softmax_channels(Tensor({2, 2, 4}, 0.7));
    for (double v : p.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  }

  TEST_CASE("1x1 conv with kernel 2 doubles an all-ones image") {
    const Tensor out = ops::conv2d(Tensor({3, 3, 1}, 1.0), Tensor({1, 1, 1, 1}, 2.0), Tensor({1}), {1, 0});
    REQUIRE(out.shape() == Shape{3, 3, 1});
    for (double v : out.values()) CHECK(v == 2.0);
  }

  TEST_CASE("conv2d geometry and shape errors") {
    const Tensor x({5, 5, 2}, 1.0);
    CHECK(ops::conv2d(x, Tensor({3, 3, 2, 4}), Tensor({4}), {2, 1}).shape() == Shape{3, 3, 4});
    CHECK_THROWS_AS(ops::conv2d(x, Tensor({3, 3, 3, 4}), Tensor({4}), {1, 1}), ShapeError);
    CHECK_THROWS_AS(ops::conv2d(x, Tensor({3, 3, 2, 4}), Tensor({2}), {1, 1}), ShapeError);
    CHECK_THROWS_AS(ops::add(Tensor({2}), Tensor({3})), ShapeError);
  }

  TEST_CASE("upsample then slice round trip") {
    Rng rng(3);
    const Tensor x = testing::random_tensor({2, 3, 2}, rng);
    const Tensor up = ops::upsample_nearest(x, 2);
    CHECK(up.shape() == Shape{4, 6, 2});
    CHECK(up[((3 * 6) + 5) * 2 + 1] == x[((1 * 3) + 2) * 2 + 1]);
    const Tensor both = ops::concat_channels(x, ops::scale(x, 2.0));
    CHECK(bit_equal(ops::slice_channels(both, 0, 2), x));
  }

  TEST_CASE("x*x at 3 has gradient 6") {
    Graph g;
    Var x = g.leaf(Tensor::scalar(3.0));
    const auto grads = g.backward(mul(x, x), {x});
    CHECK(grads[0].item() == 6.0);
  }

  TEST_CASE("cosine gradient vanishes at equal directions") {
    Rng rng(9);
    const Tensor w = testing::random_away_from_zero({12}, rng);
    Graph g;
    Var v = g.leaf(w);
    Var cw = g.constant(w);
    Var cs = div(dot(v, cw), add(mul(l2_norm(v), l2_norm(cw)), g.constant(Tensor::scalar(1e-12))));
    const auto grads = g.backward(cs, {v});
    CHECK(linf_norm(grads[0]) < 1e-12);
  }

  TEST_CASE("softmax cross-entropy through conv and relu matches finite differences") {
    Rng rng(11);
    const Tensor x = testing::random_tensor({4, 4, 3}, rng);
    const Tensor w = testing::random_tensor({3, 3, 3, 4}, rng, -0.5, 0.5);
    const Tensor b = testing::random_tensor({4}, rng, -0.1, 0.1);
    Tensor onehot({4, 4, 4});
    for (std::size_t p = 0; p < 16; ++p) onehot[p * 4 + rng.below(4)] = 1.0;
    const auto c = testing::graph_case("conv-relu-softmax-ce", {x, w, b}, [onehot](Graph& g, const auto& v) {
      Var probs = softmax_channels(relu(conv2d(v[0], v[1], v[2], {1, 1})));
      return scale(mean(mul(g.constant(onehot), log_clamped(probs))), -4.0);
    });
    CHECK(testing::max_fd_error(c) < testing::kFdTolerance);
  }

  TEST_CASE("every primitive matches finite differences") {
    for (const auto& c : testing::primitive_cases(2024, 2)) {
      CAPTURE(c.name);
      CHECK(testing::max_fd_error(c) < testing::kFdTolerance);
    }
  }

  TEST_CASE("backward preconditions") {
    SUBCASE("non-scalar root") {
      Graph g;
      Var x = g.leaf(Tensor({3}, 1.0));
      CHECK_THROWS_AS(g.backward(scale(x, 2.0), {x}), GraphError);
    }
    SUBCASE("detached leaf") {
      Graph g, other;
      Var x = g.leaf(Tensor::scalar(1.0));
      Var y = other.leaf(Tensor::scalar(1.0));
      CHECK_THROWS_AS(g.backward(mul(x, x), {y}), GraphError);
    }
    SUBCASE("consumed graph") {
      Graph g;
      Var x = g.leaf(Tensor::scalar(2.0));
      Var r = mul(x, x);
      g.backward(r, {x});
      CHECK(g.consumed());
      CHECK_THROWS_AS(g.backward(r, {x}), GraphError);
    }
    SUBCASE("constant input records no node") {
      Graph g;
      Var c = g.constant(Tensor::scalar(2.0));
      Var r = mul(c, c);
      CHECK_FALSE(r.requires_grad());
    }
  }

  TEST_CASE("non-finite results are rejected") {
    Graph g;
    Var x = g.leaf(Tensor::scalar(1.0));
    Var zero = g.constant(Tensor::scalar(0.0));
    CHECK_THROWS_AS(div(x, zero), NumericalError);
  }

  TEST_CASE("adam: zero gradient leaves params unchanged") {
    AdamState s({4}, 0.01);
    const Tensor p({4}, 0.3);
    CHECK(bit_equal(adam_step(s, p, Tensor({4})), p));
  }

  TEST_CASE("adam: first step moves by the learning rate against the gradient") {
    for (double g : {-3.0, 0.2, 7.5}) {
      AdamState s({}, 0.01);
      const Tensor out = adam_step(s, Tensor::scalar(1.0), Tensor::scalar(g));
      CHECK(out.item() - 1.0 == doctest::Approx(-0.01 * (g > 0 ? 1 : -1)).epsilon(1e-6));
    }
  }

  TEST_CASE("adam: minimizes a scalar quadratic") {
    AdamState s({}, 0.1);
    Tensor p = Tensor::scalar(0.0);
    for (int i = 0; i < 100; ++i) p = adam_step(s, p, Tensor::scalar(2.0 * (p.item() - 5.0)));
    CHECK(std::abs(p.item() - 5.0) < 0.5);
  }

  TEST_CASE("sgd momentum recurrences") {
    SUBCASE("momentum 0 is plain gradient descent") {
      SgdMomentumState s({2}, 0.1, 0.0, 0.0);
      const Tensor out = sgd_momentum_step(s, Tensor({2}, {1.0, 2.0}), Tensor({2}, {0.5, -1.0}));
      CHECK(out[0] == doctest::Approx(0.95));
      CHECK(out[1] == doctest::Approx(2.1));
    }
    SUBCASE("zero gradient and velocity keep params") {
      SgdMomentumState s({2}, 0.1, 0.9, 0.0);
      const Tensor p({2}, {1.0, 2.0});
      CHECK(bit_equal(sgd_momentum_step(s, p, Tensor({2})), p));
    }
    SUBCASE("two steps with constant gradient") {
      SgdMomentumState s({}, 1.0, 0.9, 0.0);
      const double g = 0.25;
      Tensor p = Tensor::scalar(0.0);
      p = sgd_momentum_step(s, p, Tensor::scalar(g));
      p = sgd_momentum_step(s, p, Tensor::scalar(g));
      CHECK(p.item() == doctest::Approx(-(g + 1.9 * g)).epsilon(1e-15));
    }
    SUBCASE("shape mismatch") {
      SgdMomentumState s({2}, 0.1);
      CHECK_THROWS_AS(sgd_momentum_step(s, Tensor({3}), Tensor({3})), ShapeError);
    }
  }

  TEST_CASE("rng streams are reproducible and bounded") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng c(1);
    for (int i = 0; i < 1000; ++i) {
      const double u = c.uniform();
      CHECK((u >= 0.0 && u < 1.0));
      CHECK(c.below(7) < 7);
    }
    CHECK(derive_seed({1, 2, 3}) == derive_seed({1, 2, 3}));
    CHECK(derive_seed({1, 2, 3}) != derive_seed({1, 3, 2}));
  }
}
