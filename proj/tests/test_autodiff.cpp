#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "t2t/autodiff.hpp"
#include "test_util.hpp"

using namespace t2t;
using namespace t2t::ad;
using t2t::testutil::random_matrix;
using t2t::testutil::random_vector;

TEST_CASE("elementwise forward values") {
  Tape tape;
  Var z = tape.leaf(Tensor::from_vector({0.0}));
  CHECK(ad::tanh(z).value().data[0] == 0.0);
  CHECK(sigmoid(z).value().data[0] == 0.5);

  Var u = tape.leaf(Tensor::from_vector({1.0, 1.0, 1.0}));
  const Tensor& sm = softmax(u).value();
  for (double p : sm.data) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("dot backward is the linear form") {
  Tape tape;
  Var w = tape.leaf(Tensor::from_vector({1.0, 2.0}, true));
  Var x = tape.leaf(Tensor::from_vector({3.0, 4.0}));
  Var loss = dot(w, x);
  Gradients g = tape.backward(loss);
  CHECK(g.at(w).data[0] == 3.0);
  CHECK(g.at(w).data[1] == 4.0);
}

TEST_CASE("tanh gradient at origin") {
  Tape tape;
  Var x = tape.leaf(Tensor::from_vector({0.0}, true));
  Var loss = sum(ad::tanh(x));
  Gradients g = tape.backward(loss);
  CHECK(g.at(x).data[0] == 1.0);
}

TEST_CASE("softmax cross entropy matches finite differences") {
  std::mt19937_64 rng(7);
  TensorFn f = [](Tape& t, Var logits) {
    // NLL of class 1
    return scale(slice(log_softmax(logits), 1, 1), -1.0);
  };
  const double err = finite_diff_check(f, random_vector(rng, 3, -2.0, 2.0), 1e-5);
  CHECK(err < 1e-6);
}

TEST_CASE("finite_diff_check on x^2") {
  TensorFn f = [](Tape&, Var x) { return dot(x, x); };
  const double err = finite_diff_check(f, Tensor::from_vector({3.0}), 1e-4);
  CHECK(err < 1e-8);
}

TEST_CASE("finite_diff_check rejects bad eps and non-scalar f") {
  TensorFn f = [](Tape&, Var x) { return x; };
  CHECK_THROWS_AS(finite_diff_check(f, Tensor::from_vector({1.0, 2.0}), 1e-4), ShapeError);
  TensorFn g = [](Tape&, Var x) { return dot(x, x); };
  CHECK_THROWS_AS(finite_diff_check(g, Tensor::from_vector({1.0}), 1e-2), Error);
}

// Runs f through finite differences at `points` random vectors of length n.
static void check_op_gradient(const TensorFn& f, int n, int points, std::uint64_t seed,
                              double tol = 1e-4) {
  std::mt19937_64 rng(seed);
  for (int i = 0; i < points; ++i) {
    const double err = finite_diff_check(f, random_vector(rng, n, -1.5, 1.5), 1e-4);
    CHECK(err < tol);
  }
}

TEST_CASE("every op kind passes finite differences at 10 random points") {
  std::mt19937_64 aux(99);
  const Tensor m = random_matrix(aux, 3, 4);
  const Tensor v4 = random_vector(aux, 4);
  const Tensor v6 = random_vector(aux, 6);
  const Tensor m2 = random_matrix(aux, 4, 2);

  SUBCASE("add") {
    check_op_gradient([&](Tape& t, Var x) { return sum(add(x, t.leaf(v6))); }, 6, 10, 1);
  }
  SUBCASE("sub") {
    check_op_gradient([&](Tape& t, Var x) { return sum(sub(t.leaf(v6), x)); }, 6, 10, 2);
  }
  SUBCASE("mul") {
    check_op_gradient([&](Tape& t, Var x) { return sum(mul(x, mul(x, t.leaf(v6)))); }, 6, 10, 3);
  }
  SUBCASE("scale") {
    check_op_gradient([](Tape& t, Var x) { return sum(scale(x, -2.5)); }, 6, 10, 4);
  }
  SUBCASE("scalar_mul") {
    check_op_gradient(
        [&](Tape& t, Var x) {
          return sum(scalar_mul(slice(x, 0, 5), slice(x, 5, 1)));
        },
        6, 10, 5);
  }
  SUBCASE("div_scalar") {
    check_op_gradient(
        [&](Tape& t, Var x) {
          // keep the denominator away from zero
          Var denom = add(mul(slice(x, 5, 1), slice(x, 5, 1)), t.leaf(Tensor::scalar(0.5)));
          return sum(div_scalar(slice(x, 0, 5), denom));
        },
        6, 10, 6);
  }
  SUBCASE("matmul vector side") {
    check_op_gradient([&](Tape& t, Var x) { return sum(matmul(t.leaf(m), x)); }, 4, 10, 7);
  }
  SUBCASE("matmul matrix side and matrix-matrix") {
    // finite_diff_check perturbs flat coordinates, which works for any shape
    TensorFn fm = [&](Tape& t, Var w) { return sum(matmul(w, t.leaf(v4))); };
    std::mt19937_64 rng(10);
    for (int i = 0; i < 10; ++i) {
      CHECK(finite_diff_check(fm, random_matrix(rng, 3, 4), 1e-4) < 1e-4);
    }
    TensorFn fmm = [&](Tape& t, Var w) { return sum(matmul(w, t.leaf(m2))); };
    for (int i = 0; i < 10; ++i) {
      CHECK(finite_diff_check(fmm, random_matrix(rng, 3, 4), 1e-4) < 1e-4);
    }
    TensorFn frhs = [&](Tape& t, Var w) { return sum(matmul(t.leaf(m), w)); };
    for (int i = 0; i < 10; ++i) {
      CHECK(finite_diff_check(frhs, random_matrix(rng, 4, 2), 1e-4) < 1e-4);
    }
  }
  SUBCASE("tanh") {
    check_op_gradient([](Tape&, Var x) { return sum(ad::tanh(x)); }, 6, 10, 13);
  }
  SUBCASE("sigmoid") {
    check_op_gradient([](Tape&, Var x) { return sum(sigmoid(x)); }, 6, 10, 14);
  }
  SUBCASE("softmax") {
    check_op_gradient(
        [&](Tape& t, Var x) { return dot(softmax(x), t.leaf(v6)); }, 6, 10, 15);
  }
  SUBCASE("log_softmax") {
    check_op_gradient(
        [&](Tape& t, Var x) { return dot(log_softmax(x), t.leaf(v6)); }, 6, 10, 16);
  }
  SUBCASE("concat") {
    check_op_gradient(
        [&](Tape& t, Var x) {
          Var c = concat({slice(x, 0, 2), slice(x, 2, 4), t.leaf(v4)});
          return dot(c, c);
        },
        6, 10, 17);
  }
  SUBCASE("dot") {
    check_op_gradient([](Tape&, Var x) { return dot(slice(x, 0, 3), slice(x, 3, 3)); }, 6, 10, 18);
  }
  SUBCASE("sum") {
    check_op_gradient([](Tape&, Var x) { return sum(mul(x, x)); }, 6, 10, 19);
  }
  SUBCASE("slice") {
    check_op_gradient([](Tape&, Var x) { return dot(slice(x, 1, 3), slice(x, 1, 3)); }, 6, 10, 20);
  }
  SUBCASE("row") {
    std::mt19937_64 rng(21);
    TensorFn f = [](Tape& t, Var w) { return sum(mul(row(w, 1), row(w, 1))); };
    for (int i = 0; i < 10; ++i) {
      CHECK(finite_diff_check(f, random_matrix(rng, 3, 4), 1e-4) < 1e-4);
    }
  }
  SUBCASE("gather") {
    const std::vector<int> idx{0, 0, 2, 4};
    check_op_gradient(
        [&](Tape&, Var x) {
          Var g = gather(x, idx);
          return dot(g, g);
        },
        6, 10, 22);
  }
}

TEST_CASE("softmax output is a probability vector") {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 200; ++i) {
    Tape tape;
    std::uniform_int_distribution<int> len(1, 9);
    Var x = tape.leaf(random_vector(rng, len(rng), -20.0, 20.0));
    const Tensor& p = softmax(x).value();
    double s = 0.0;
    for (double v : p.data) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("backward is linear in the loss") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor point = random_vector(rng, 5);
    point.requires_grad = true;
    Tensor aux = random_vector(rng, 5);

    auto build = [&](Tape& t, Var x, int which) -> Var {
      Var a = dot(ad::tanh(x), t.leaf(aux));
      Var b = sum(mul(x, sigmoid(x)));
      if (which == 0) return a;
      if (which == 1) return b;
      return add(a, b);
    };

    std::vector<double> ga, gb, gsum;
    for (int which = 0; which < 3; ++which) {
      Tape tape;
      Var x = tape.leaf(point);
      Gradients g = tape.backward(build(tape, x, which));
      const auto& d = g.at(x).data;
      if (which == 0) ga = d;
      if (which == 1) gb = d;
      if (which == 2) gsum = d;
    }
    for (std::size_t i = 0; i < ga.size(); ++i) {
      CHECK(std::abs(ga[i] + gb[i] - gsum[i]) <= 1e-12);
    }
  }
}

TEST_CASE("gradient accumulates when a node feeds multiple consumers") {
  Tape tape;
  Var x = tape.leaf(Tensor::from_vector({2.0}, true));
  Var y = add(mul(x, x), scale(x, 3.0));  // x^2 + 3x
  Gradients g = tape.backward(sum(y));
  CHECK(g.at(x).data[0] == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("shape errors name the op and shapes") {
  Tape tape;
  Var a = tape.leaf(Tensor::from_vector({1.0, 2.0}));
  Var b = tape.leaf(Tensor::from_vector({1.0, 2.0, 3.0}));
  try {
    add(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("{2}") != std::string::npos);
    CHECK(msg.find("{3}") != std::string::npos);
  }

  Var m = tape.leaf(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK_THROWS_AS(matmul(m, a), ShapeError);
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape tape;
  Var x = tape.leaf(Tensor::from_vector({1.0, 2.0}, true));
  CHECK_THROWS_AS(tape.backward(x), ShapeError);
}

TEST_CASE("detached loss yields zero gradients for grad leaves") {
  Tape tape;
  Var p = tape.leaf(Tensor::from_vector({1.0, 2.0}, true));
  Var c = tape.leaf(Tensor::from_vector({3.0, 4.0}));
  Var loss = sum(mul(c, c));
  Gradients g = tape.backward(loss);
  REQUIRE(g.has(p.id));
  CHECK(g.at(p).data[0] == 0.0);
  CHECK(g.at(p).data[1] == 0.0);
}

TEST_CASE("forward values are deterministic") {
  std::mt19937_64 rng(55);
  Tensor point = random_vector(rng, 8);
  auto run = [&]() {
    Tape tape;
    Var x = tape.leaf(point);
    Var y = softmax(ad::tanh(scale(x, 1.7)));
    return y.value().data;
  };
  CHECK(run() == run());
}

TEST_CASE("forward ops stay finite on bounded inputs") {
  std::mt19937_64 rng(66);
  for (int i = 0; i < 100; ++i) {
    Tape tape;
    Var x = tape.leaf(random_vector(rng, 6, -50.0, 50.0));
    CHECK(softmax(x).value().all_finite());
    CHECK(log_softmax(x).value().all_finite());
    CHECK(sigmoid(x).value().all_finite());
    CHECK(ad::tanh(x).value().all_finite());
  }
}
