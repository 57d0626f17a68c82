#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "dst/autodiff.hpp"

using namespace dst;

namespace {

void fill_random(Array& a, std::mt19937_64& rng, double away_from_zero = 0.0) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (double& v : a.data) {
    double x = u(rng);
    if (away_from_zero == 0.0) x -= 0.55;  // roughly centered
    v = sign(rng) ? x : -x;
    if (away_from_zero > 0.0 && std::abs(v) < away_from_zero)
      v = v < 0 ? -away_from_zero : away_from_zero;
  }
}

}  // namespace

TEST_CASE("scalar analytic values") {
  Tape tape;
  Var x = tape.constant(Array::scalar(0.0));
  CHECK(sigmoid(x).val().data[0] == doctest::Approx(0.5));

  Var y = tape.constant(Array::vec({1, 2}));
  Var z = tape.constant(Array::vec({3}));
  Var c = concat({y, z});
  CHECK(c.val().shape == std::vector<std::size_t>{3});
  CHECK(c.val().data == std::vector<double>{1, 2, 3});
}

TEST_CASE("matmul identity") {
  Tape tape;
  Array id({3, 3});
  for (int i = 0; i < 3; ++i) id.at(i, i) = 1.0;
  Array a({3, 4});
  std::mt19937_64 rng(1);
  fill_random(a, rng);
  Var r = matmul(tape.constant(id), tape.constant(a));
  CHECK(r.val().data == a.data);
}

TEST_CASE("backward: x^2 at x=3 gives 6") {
  Param x("x", {1});
  x.value.data[0] = 3.0;
  Tape tape;
  Var xv = tape.leaf(x);
  Var loss = mean(mul(xv, xv));
  tape.backward(loss);
  CHECK(x.grad.data[0] == doctest::Approx(6.0));
}

TEST_CASE("backward: sigmoid at 0 gives 0.25") {
  Param x("x", {1});
  Tape tape;
  Var loss = mean(sigmoid(tape.leaf(x)));
  tape.backward(loss);
  CHECK(x.grad.data[0] == doctest::Approx(0.25));
}

TEST_CASE("backward requires scalar loss") {
  Param x("x", {3});
  Tape tape;
  Var v = tape.leaf(x);
  CHECK_THROWS_AS(tape.backward(v), std::invalid_argument);
}

TEST_CASE("shape mismatch names op and shapes") {
  Tape tape;
  Var a = tape.constant(Array::zeros({2, 3}));
  Var b = tape.constant(Array::zeros({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("check_gradients on x^2 matches hand central difference") {
  Param x("x", {1});
  x.value.data[0] = 3.0;
  auto run = [&](bool with_grad) {
    x.zero_grad();
    Tape tape;
    Var xv = tape.leaf(x);
    Var loss = mean(mul(xv, xv));
    if (with_grad) tape.backward(loss);
    return loss.val().data[0];
  };
  // central difference is exact for quadratics
  double rel = check_gradients(run, {&x}, 1e-3);
  CHECK(rel < 1e-9);
}

TEST_CASE("check_gradients exact for linear functions") {
  Param x("x", {4});
  std::mt19937_64 rng(7);
  fill_random(x.value, rng);
  auto run = [&](bool with_grad) {
    x.zero_grad();
    Tape tape;
    Var loss = mean(scale(tape.leaf(x), 2.5));
    if (with_grad) tape.backward(loss);
    return loss.val().data[0];
  };
  CHECK(check_gradients(run, {&x}, 1e-4) < 1e-10);
}

TEST_CASE("gradient check: every primitive < 1e-6") {
  std::mt19937_64 rng(42);
  Param a("a", {3, 4}), b("b", {4, 2}), v("v", {4}), w("w", {3, 4});
  Param bias("bias", {2}), logits("logits", {5}), table("table", {6, 4});
  for (Param* p : {&a, &b, &v, &w, &bias, &logits, &table})
    fill_random(p->value, rng, 0.05);
  std::vector<Param*> params{&a, &b, &v, &w, &bias, &logits, &table};

  auto run = [&](bool with_grad) {
    for (Param* p : params) p->zero_grad();
    Tape tape;
    Var A = tape.leaf(a), B = tape.leaf(b), V = tape.leaf(v), W = tape.leaf(w);
    Var L = tape.leaf(logits), T = tape.leaf(table);

    Var mm = matmul(A, B);                       // [3,2]
    Var mb = add(mm, tape.leaf(bias));           // row broadcast
    Var act = tanh_op(sigmoid(mb));
    Var mv = matmul(W, V);                       // [3]
    Var ew = mul(mv, relu(mv));
    Var sl = slice(concat({ew, V}), 1, 6);       // [5]
    Var gr = gather_rows(T, {1, 3, 3});          // duplicate rows
    Var gm = mean_rows(gr);                      // [4]
    Var st = stack_rows({gm, V});                // [2,4]
    std::mt19937_64 drop_rng(9);                 // frozen mask per call
    Var dr = dropout(st, 0.4, drop_rng, true);
    Var bce = weighted_bce_sum(L, {1, 0, 1, 0, 0}, 8.0);
    Var loss = add_n({mean(act), mean(ew), mean(sl), mean(dr),
                      scale(bce, 0.1), mean(scale(sl, 0.5))});
    if (with_grad) tape.backward(loss);
    return loss.val().data[0];
  };

  CHECK(check_gradients(run, params, 1e-4) < 1e-6);
}

TEST_CASE("dropout is identity at eval time") {
  Tape tape;
  std::mt19937_64 rng(3);
  Array x({4, 4});
  fill_random(x, rng);
  Var xv = tape.constant(x);
  Var y = dropout(xv, 0.5, rng, false);
  CHECK(y.val().data == x.data);
}

TEST_CASE("dropout train mode scales surviving entries") {
  Tape tape;
  Array x({1000});
  x.fill(1.0);
  std::mt19937_64 rng(5);
  Var y = dropout(tape.constant(x), 0.5, rng, true);
  std::size_t kept = 0;
  for (double v : y.val().data) {
    if (v != 0.0) {
      CHECK(v == doctest::Approx(2.0));
      ++kept;
    }
  }
  CHECK(kept > 400);
  CHECK(kept < 600);
}

TEST_CASE("forward and backward are bit-identical across runs") {
  auto run = [](std::vector<double>* grads) {
    std::mt19937_64 rng(11);
    Param a("a", {8, 8}), b("b", {8});
    fill_random(a.value, rng);
    fill_random(b.value, rng);
    Tape tape;
    Var loss = mean(tanh_op(matmul(tape.leaf(a), tape.leaf(b))));
    tape.backward(loss);
    *grads = a.grad.data;
    return loss.val().data[0];
  };
  std::vector<double> g1, g2;
  double l1 = run(&g1);
  double l2 = run(&g2);
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}

TEST_CASE("weighted bce hand values") {
  Tape tape;
  Var logit0 = tape.constant(Array::vec({0.0}));
  // y=1, p=0.5, w=8 -> 8*ln 2
  CHECK(weighted_bce_sum(logit0, {1}, 8.0).val().data[0] ==
        doctest::Approx(8.0 * std::log(2.0)).epsilon(1e-10));
  // y=0, p=0.5 -> ln 2
  CHECK(weighted_bce_sum(logit0, {0}, 8.0).val().data[0] ==
        doctest::Approx(std::log(2.0)).epsilon(1e-10));
  // y=1, p -> 1: loss -> 0 (up to the probability clamp)
  Var big = tape.constant(Array::vec({30.0}));
  CHECK(weighted_bce_sum(big, {1}, 8.0).val().data[0] < 1e-5);
}

TEST_CASE("non-finite forward value is rejected") {
  Tape tape;
  Var x = tape.constant(Array::vec({1e308}));
  CHECK_THROWS(mul(scale(x, 10.0), scale(x, 10.0)));
}
