#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "milrec/error.hpp"
#include "milrec/model.hpp"
#include "milrec/numeric.hpp"
#include "milrec/regularization.hpp"

using namespace milrec;

TEST_CASE("weight_decay: values and gradients") {
  Matrix W(1, 1), Wp(1, 1);
  W(0, 0) = 2.0;
  Matrix gW(1, 1), gWp(1, 1);
  double penalty = weight_decay(W, Wp, 0.5, &gW, &gWp);
  CHECK(penalty == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(gW(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(gWp(0, 0) == 0.0);

  gW.fill(0.3);
  CHECK(weight_decay(W, Wp, 0.0, &gW, &gWp) == 0.0);
  CHECK(gW(0, 0) == 0.3);  // untouched at lambda = 0
}

TEST_CASE("weight_decay: gradient matches finite differences") {
  Rng r(2);
  Matrix W(3, 4), Wp(4, 3);
  for (double& v : W.data) v = r.next_uniform_sym(1.0);
  for (double& v : Wp.data) v = r.next_uniform_sym(1.0);
  const double lambda = 0.37;

  Matrix gW(3, 4), gWp(4, 3);
  weight_decay(W, Wp, lambda, &gW, &gWp);

  auto f = [&](std::span<const double> x) {
    Matrix W2 = W;
    std::copy(x.begin(), x.end(), W2.data.begin());
    return weight_decay(W2, Wp, lambda, nullptr, nullptr);
  };
  Vector fd = finite_diff_gradient(f, W.data, 1e-6);
  for (std::size_t i = 0; i < fd.size(); ++i)
    CHECK(gW.data[i] == doctest::Approx(fd[i]).epsilon(1e-8));
}

TEST_CASE("scaled_weight_decay: shape-equalized penalty") {
  const std::size_t D = 3, U = 5, I = 8;
  Matrix W(D, U), Wp(I, D);
  W.fill(1.0);
  double p = scaled_weight_decay(W, Wp, 0.7, D, U, I, nullptr, nullptr);
  CHECK(p == doctest::Approx(0.7).epsilon(1e-12));  // |W|^2 = D*U cancels

  CHECK(scaled_weight_decay(W, Wp, 0.0, D, U, I, nullptr, nullptr) == 0.0);

  // doubling the user count at fixed entries halves the W term
  Matrix W2(D, 2 * U);
  W2.fill(1.0);
  double p2 = scaled_weight_decay(W2, Wp, 0.7, D, 2 * U, I, nullptr, nullptr);
  CHECK(p2 == doctest::Approx(0.7).epsilon(1e-12));  // still cancels: same RMS
  Matrix Whalf(D, U);
  Whalf.fill(1.0);
  double ph = scaled_weight_decay(Whalf, Wp, 0.7, D, 2 * U, I, nullptr, nullptr);
  CHECK(ph == doctest::Approx(0.35).epsilon(1e-12));

  CHECK_THROWS_AS(scaled_weight_decay(W, Wp, 0.7, 0, U, I, nullptr, nullptr), InvalidArgument);
}

TEST_CASE("scaled_weight_decay: equal RMS means equal penalty regardless of shape") {
  Rng r(5);
  const double rms = 0.4;
  Matrix W(4, 30), Wp(100, 4);
  for (double& v : W.data) v = rms * (r.next_below(2) ? 1.0 : -1.0);
  for (double& v : Wp.data) v = rms * (r.next_below(2) ? 1.0 : -1.0);
  Matrix zeroA(4, 30), zeroB(100, 4);
  double only_W = scaled_weight_decay(W, zeroB, 1.0, 4, 30, 100, nullptr, nullptr);
  double only_Wp = scaled_weight_decay(zeroA, Wp, 1.0, 4, 30, 100, nullptr, nullptr);
  CHECK(only_W == doctest::Approx(only_Wp).epsilon(1e-12));
}

TEST_CASE("scaled_weight_decay: gradient matches finite differences") {
  Rng r(3);
  Matrix W(2, 6), Wp(7, 2);
  for (double& v : W.data) v = r.next_uniform_sym(1.0);
  for (double& v : Wp.data) v = r.next_uniform_sym(1.0);
  Matrix gW(2, 6), gWp(7, 2);
  scaled_weight_decay(W, Wp, 2.5, 2, 6, 7, &gW, &gWp);
  auto f = [&](std::span<const double> x) {
    Matrix Wp2 = Wp;
    std::copy(x.begin(), x.end(), Wp2.data.begin());
    return scaled_weight_decay(W, Wp2, 2.5, 2, 6, 7, nullptr, nullptr);
  };
  Vector fd = finite_diff_gradient(f, Wp.data, 1e-6);
  for (std::size_t i = 0; i < fd.size(); ++i)
    CHECK(gWp.data[i] == doctest::Approx(fd[i]).epsilon(1e-8));
}

TEST_CASE("max_norm_clip: worked example and pass-through") {
  Vector x = {3.0, 4.0};
  max_norm_clip(x, 1.0 / std::sqrt(2.0));  // n = 1
  CHECK(x[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(0.8).epsilon(1e-12));

  Vector small = {0.3, 0.4};
  Vector copy = small;
  max_norm_clip(small, 1.0 / std::sqrt(2.0));
  CHECK(small == copy);

  Vector zero = {0.0, 0.0, 0.0};
  max_norm_clip(zero, 0.5);
  CHECK(zero == Vector{0.0, 0.0, 0.0});

  CHECK_THROWS_AS(max_norm_clip(small, 0.0), InvalidArgument);
}

TEST_CASE("max_norm_clip: idempotent bit for bit, direction preserved") {
  Rng r(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t dim = 1 + r.next_below(16);
    double alpha = 0.1 + r.next_double();
    Vector x(dim);
    for (double& v : x) v = r.next_uniform_sym(5.0);
    Vector original = x;
    max_norm_clip(x, alpha);
    Vector once = x;
    max_norm_clip(x, alpha);
    CHECK(x == once);  // exact idempotence

    double n = alpha * std::sqrt(static_cast<double>(dim));
    double norm = 0.0, dot = 0.0, orig_norm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      norm += once[i] * once[i];
      dot += once[i] * original[i];
      orig_norm += original[i] * original[i];
    }
    norm = std::sqrt(norm);
    orig_norm = std::sqrt(orig_norm);
    CHECK(norm <= n + 1e-12);
    if (orig_norm > 0.0 && norm > 0.0)
      CHECK(dot / (norm * orig_norm) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("apply_max_norm: locality, postcondition, biases untouched") {
  ModelParams p;
  p.kind = ModelKind::dae;
  p.W = Matrix(3, 4);
  p.b = {5.0, -5.0, 5.0};
  p.Wp = Matrix(4, 3);
  p.bp = {9.0, 9.0, 9.0, 9.0};
  p.W.fill(0.1);
  for (std::size_t d = 0; d < 3; ++d) p.W(d, 2) = 10.0;  // one oversized column
  p.Wp.fill(0.05);

  ModelParams before = p;
  apply_max_norm(p, 0.5, 0.5);
  for (std::size_t j = 0; j < 4; ++j) {
    double sq = 0.0;
    for (std::size_t d = 0; d < 3; ++d) sq += p.W(d, j) * p.W(d, j);
    CHECK(std::sqrt(sq) <= 0.5 * std::sqrt(3.0) + 1e-12);
    if (j != 2)
      for (std::size_t d = 0; d < 3; ++d) CHECK(p.W(d, j) == before.W(d, j));
  }
  CHECK(p.b == before.b);
  CHECK(p.bp == before.bp);
  CHECK(p.Wp.data == before.Wp.data);  // rows already within bound

  ModelParams again = p;
  apply_max_norm(again, 0.5, 0.5);
  CHECK(again.W.data == p.W.data);  // idempotence at the model level
}

TEST_CASE("dropout_corrupt: identity at q=0, support shrinks, determinism") {
  SparseVec v;
  v.idx = {1, 4, 7, 9};
  v.val = {1.0, 0.5, 2.0, 1.0};
  SparseVec copy = v;
  Rng r(1);
  dropout_corrupt(v, 0.0, r);
  CHECK(v.idx == copy.idx);
  CHECK(v.val == copy.val);

  Rng r2(2);
  SparseVec w = copy;
  dropout_corrupt(w, 0.6, r2);
  for (std::uint32_t i : w.idx)
    CHECK(std::find(copy.idx.begin(), copy.idx.end(), i) != copy.idx.end());

  Rng r3(7), r4(7);
  SparseVec a = copy, b = copy;
  dropout_corrupt(a, 0.5, r3);
  dropout_corrupt(b, 0.5, r4);
  CHECK(a.idx == b.idx);

  SparseVec inv = copy;
  Rng r5(7);
  dropout_corrupt(inv, 0.5, r5, true);
  CHECK(inv.idx == a.idx);  // same mask
  for (std::size_t k = 0; k < inv.val.size(); ++k)
    CHECK(inv.val[k] == doctest::Approx(a.val[k] * 2.0).epsilon(1e-15));

  CHECK_THROWS_AS(dropout_corrupt(v, 1.0, r), InvalidArgument);
}

TEST_CASE("dropout_corrupt: surviving count matches the binomial mean") {
  const std::size_t len = 10;
  const double q = 0.3;
  const int trials = 10000;
  SparseVec proto;
  for (std::uint32_t i = 0; i < len; ++i) {
    proto.idx.push_back(i);
    proto.val.push_back(1.0);
  }
  std::int64_t survivors = 0;
  for (int t = 0; t < trials; ++t) {
    SparseVec v = proto;
    Rng r(1000 + static_cast<std::uint64_t>(t));
    dropout_corrupt(v, q, r);
    survivors += static_cast<std::int64_t>(v.idx.size());
  }
  double n = static_cast<double>(trials) * len;
  double mean = n * (1.0 - q);
  double sigma = std::sqrt(n * q * (1.0 - q));
  CHECK(std::abs(static_cast<double>(survivors) - mean) < 3.0 * sigma);
}

TEST_CASE("reg spec validation") {
  RegSpec reg;
  CHECK_NOTHROW(reg.validate());
  reg.lambda = -1.0;
  CHECK_THROWS_AS(reg.validate(), InvalidArgument);
  reg = {};
  reg.dropout_q = 1.0;
  CHECK_THROWS_AS(reg.validate(), InvalidArgument);
  reg = {};
  reg.alpha_enc = 0.0;
  CHECK_THROWS_AS(reg.validate(), InvalidArgument);
}
