#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "milrec/error.hpp"
#include "milrec/numeric.hpp"
#include "milrec/rng.hpp"

using namespace milrec;

TEST_CASE("rng: identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42), d(43);
  bool differ = false;
  for (int i = 0; i < 10; ++i) differ |= c.next_u64() != d.next_u64();
  CHECK(differ);
}

TEST_CASE("rng: substreams are independent of draw position") {
  Rng a(7);
  Rng sub_before = a.substream(3);
  a.next_u64();
  a.next_u64();
  Rng sub_after = a.substream(3);
  CHECK(sub_before.next_u64() == sub_after.next_u64());
  CHECK(Rng::mix(7, 1) != Rng::mix(7, 2));
  CHECK(Rng::mix(Rng::mix(7, 1), 2) != Rng::mix(Rng::mix(7, 2), 1));
}

TEST_CASE("rng: next_double in [0,1), next_below in range") {
  Rng r(11);
  for (int i = 0; i < 1000; ++i) {
    double d = r.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    CHECK(r.next_below(17) < 17);
  }
}

TEST_CASE("activations: values and derivatives") {
  CHECK(activate(Activation::sigmoid, 0.0) == doctest::Approx(0.5));
  CHECK(activate(Activation::linear, 3.7) == 3.7);
  CHECK(activate_grad(Activation::linear, 3.7) == 1.0);
  CHECK(activate_grad(Activation::sigmoid, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(activate(Activation::relu, -2.0) == 0.0);
  CHECK(activate(Activation::relu, 2.5) == 2.5);
  CHECK(activate(Activation::tanh, 0.0) == 0.0);
  // sigmoid stays finite and exact at extreme inputs
  CHECK(activate(Activation::sigmoid, -745.0) > 0.0);
  CHECK(activate(Activation::sigmoid, 745.0) == doctest::Approx(1.0));
}

TEST_CASE("activations: derivative matches finite differences at 100 points") {
  Rng r(5);
  for (Activation kind :
       {Activation::linear, Activation::sigmoid, Activation::tanh, Activation::relu}) {
    int checked = 0;
    while (checked < 100) {
      double x = -5.0 + 10.0 * r.next_double();
      if (kind == Activation::relu && std::abs(x) < 1e-3) continue;  // kink
      auto f = [kind](std::span<const double> v) { return activate(kind, v[0]); };
      double fd = finite_diff_gradient(f, std::vector<double>{x}, 1e-6)[0];
      double an = activate_grad(kind, x);
      double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
      CHECK(rel < 1e-6);
      ++checked;
    }
  }
}

TEST_CASE("glorot_uniform: bound, determinism, errors") {
  Rng r(3);
  Matrix m = glorot_uniform(3, 3, r);
  for (double v : m.data) CHECK(std::abs(v) <= 1.0);  // sqrt(6/6)

  Rng r2(3);
  Matrix m2 = glorot_uniform(3, 3, r2);
  CHECK(m.data == m2.data);

  Rng r3(9);
  Matrix one = glorot_uniform(1, 1, r3);
  CHECK(std::abs(one.data[0]) <= std::sqrt(3.0));

  Rng r4(1);
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{2, 11},
                            {7, 3},
                            {20, 5}}) {
    Matrix g = glorot_uniform(rows, cols, r4);
    double bound = std::sqrt(6.0 / double(rows + cols));
    for (double v : g.data) CHECK(std::abs(v) <= bound);
  }

  Rng r5(2);
  CHECK_THROWS_AS(glorot_uniform(0, 3, r5), InvalidArgument);
}

TEST_CASE("truncated_normal: truncation, length, determinism, errors") {
  Rng r(13);
  Vector v = truncated_normal(1000, 1e-3, r);
  CHECK(v.size() == 1000);
  for (double x : v) CHECK(std::abs(x) <= 2e-3);

  Rng r2(13);
  CHECK(truncated_normal(1000, 1e-3, r2) == v);

  Rng r3(1);
  CHECK(truncated_normal(0, 1.0, r3).empty());
  CHECK_THROWS_AS(truncated_normal(5, 0.0, r3), InvalidArgument);
  CHECK_THROWS_AS(truncated_normal(5, -1.0, r3), InvalidArgument);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Vector p = {1.0, -2.0, 0.5};
  Vector g = {0.0, 0.0, 0.0};
  AdamState st(3);
  adam_step(p, g, st, {});
  CHECK(p == Vector{1.0, -2.0, 0.5});
  CHECK(st.t == 1);
}

TEST_CASE("adam: first step is approximately lr in the gradient direction") {
  Vector p = {0.0};
  Vector g = {1.0};
  AdamState st(1);
  AdamConfig cfg;
  cfg.lr = 1e-3;
  adam_step(p, g, st, cfg);
  CHECK(p[0] == doctest::Approx(-1e-3).epsilon(1e-7));
}

TEST_CASE("adam: per-coordinate step bound at t=1") {
  Rng r(8);
  Vector p(50), g(50);
  for (auto& x : p) x = r.next_uniform_sym(3.0);
  for (auto& x : g) x = r.next_uniform_sym(10.0);
  Vector before = p;
  AdamState st(50);
  AdamConfig cfg;
  adam_step(p, g, st, cfg);
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK(std::abs(p[i] - before[i]) <= cfg.lr / (1.0 - cfg.beta1) + 1e-15);
}

TEST_CASE("adam: determinism and shape errors") {
  Vector p1 = {1.0, 2.0}, p2 = {1.0, 2.0};
  Vector g = {0.3, -0.7};
  AdamState s1(2), s2(2);
  for (int i = 0; i < 5; ++i) {
    adam_step(p1, g, s1, {});
    adam_step(p2, g, s2, {});
  }
  CHECK(p1 == p2);

  Matrix mp(2, 2), mg(2, 3);
  AdamState st;
  CHECK_THROWS_AS(adam_step(mp, mg, st, {}), InvalidArgument);
}

TEST_CASE("finite_diff_gradient: analytic cases") {
  auto square = [](std::span<const double> x) { return x[0] * x[0]; };
  double g = finite_diff_gradient(square, std::vector<double>{3.0}, 1e-5)[0];
  CHECK(g == doctest::Approx(6.0).epsilon(1e-8));

  auto constant = [](std::span<const double>) { return 4.2; };
  Vector zero = finite_diff_gradient(constant, std::vector<double>{1.0, 2.0, 3.0}, 1e-5);
  for (double v : zero) CHECK(v == 0.0);

  auto sig = [](std::span<const double> x) { return activate(Activation::sigmoid, x[0]); };
  double gs = finite_diff_gradient(sig, std::vector<double>{0.0}, 1e-5)[0];
  CHECK(gs == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("finite_diff_gradient: non-finite evaluation raises") {
  auto bad = [](std::span<const double> x) { return std::log(x[0]); };
  CHECK_THROWS_AS(finite_diff_gradient(bad, std::vector<double>{0.0}, 1e-3), NumericError);
  CHECK_THROWS_AS(finite_diff_gradient(bad, std::vector<double>{1.0}, -1.0), InvalidArgument);
}

TEST_CASE("ipow matches repeated multiplication") {
  CHECK(ipow(1.7, 0) == 1.0);
  CHECK(ipow(-0.3, 3) == doctest::Approx(-0.027).epsilon(1e-15));
  CHECK(ipow(0.5, 20) == doctest::Approx(9.5367431640625e-7).epsilon(1e-15));
  CHECK_THROWS_AS(ipow(2.0, -1), InvalidArgument);
}
