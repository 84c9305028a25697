#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gradcheck.hpp"
#include "igsd/optim.hpp"
#include "igsd/rng.hpp"

using namespace igsd;
using igsd::testing::max_gradient_error;
using igsd::testing::random_matrix;

TEST_CASE("kernel forward values") {
  SUBCASE("relu") {
    Mat x(1, 2);
    x << -1.0, 2.0;
    Tensor t = Tensor::leaf(x, true);
    Tape tape;
    Tensor y = relu(t);
    CHECK(y.value()(0, 0) == 0.0);
    CHECK(y.value()(0, 1) == 2.0);
    backward(sum_all(y));  // upstream ones
    CHECK(t.grad()(0, 0) == 0.0);
    CHECK(t.grad()(0, 1) == 1.0);
  }
  SUBCASE("l2_normalize_rows on a 3-4-5 row") {
    Mat x(1, 2);
    x << 3.0, 4.0;
    Tensor y = l2_normalize_rows(Tensor::constant(x));
    CHECK(y.value()(0, 0) == doctest::Approx(0.6));
    CHECK(y.value()(0, 1) == doctest::Approx(0.8));
  }
  SUBCASE("softmax_rows uniform on equal logits") {
    Tensor y = softmax_rows(Tensor::constant(Mat::Zero(2, 4)));
    CHECK(y.value()(1, 3) == doctest::Approx(0.25));
  }
  SUBCASE("concat_cols stitches columns") {
    Tensor y = concat_cols(Tensor::constant(Mat::Ones(2, 2)), Tensor::constant(Mat::Zero(2, 3)));
    CHECK(y.cols() == 5);
    CHECK(y.value()(0, 1) == 1.0);
    CHECK(y.value()(0, 2) == 0.0);
  }
  SUBCASE("sum_rows collapses to one row") {
    Mat x(3, 2);
    x << 1, 2, 3, 4, 5, 6;
    Tensor y = sum_rows(Tensor::constant(x));
    CHECK(y.rows() == 1);
    CHECK(y.value()(0, 0) == 9.0);
    CHECK(y.value()(0, 1) == 12.0);
  }
  SUBCASE("add broadcasts a row vector") {
    Mat b(1, 2);
    b << 10, 20;
    Tensor y = add(Tensor::constant(Mat::Ones(3, 2)), Tensor::constant(b));
    CHECK(y.value()(2, 0) == 11.0);
    CHECK(y.value()(0, 1) == 21.0);
  }
}

TEST_CASE("kernel shape and domain guards") {
  Tensor a = Tensor::constant(Mat::Ones(2, 3));
  Tensor b = Tensor::constant(Mat::Ones(2, 2));
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(mul(a, b), ShapeError);
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(l2_normalize_rows(Tensor::constant(Mat::Zero(1, 3))), NumericalError);
  CHECK_THROWS_AS(log(Tensor::constant(Mat::Zero(1, 1))), NumericalError);
  CHECK_THROWS_AS(exp(Tensor::constant(Mat::Constant(1, 1, 1e4))), NumericalError);
  CHECK_THROWS_AS(pick_per_row(a, {0, 5}), ShapeError);
  CHECK_THROWS_AS(pick_per_row(a, {0}), ShapeError);
}

TEST_CASE("backward basics") {
  SUBCASE("loss = sum(x) -> unit gradients") {
    auto rng = make_rng(1);
    Tensor x = Tensor::leaf(random_matrix(1, 3, rng), true);
    Tape tape;
    backward(sum_all(x));
    CHECK(x.grad() == Mat::Ones(1, 3));
  }
  SUBCASE("loss = sum(x .* x), x = [1, 2] -> grad [2, 4]") {
    Mat v(1, 2);
    v << 1.0, 2.0;
    Tensor x = Tensor::leaf(v, true);
    Tape tape;
    backward(sum_all(mul(x, x)));
    CHECK(x.grad()(0, 0) == doctest::Approx(2.0));
    CHECK(x.grad()(0, 1) == doctest::Approx(4.0));
  }
  SUBCASE("repeated backward accumulates leaf gradients") {
    Tensor x = Tensor::leaf(Mat::Ones(1, 2), true);
    Tape tape;
    Tensor loss = sum_all(mul(x, x));
    backward(loss);
    backward(loss);
    CHECK(x.grad()(0, 0) == doctest::Approx(4.0));  // 2 + 2
  }
  SUBCASE("non-scalar loss rejected") {
    Tensor x = Tensor::leaf(Mat::Ones(2, 2), true);
    Tape tape;
    Tensor y = mul(x, x);
    CHECK_THROWS_AS(backward(y), ShapeError);
  }
  SUBCASE("loss off the active tape rejected") {
    Tensor x = Tensor::leaf(Mat::Ones(1, 1), true);
    CHECK_THROWS_AS(backward(x), StateError);
  }
}

TEST_CASE("finite-difference gradient check per kernel") {
  auto rng = make_rng(2024);
  for (int instance = 0; instance < 5; ++instance) {
    Tensor a = Tensor::leaf(random_matrix(4, 3, rng), true);
    Tensor b = Tensor::leaf(random_matrix(4, 3, rng), true);
    Tensor w = Tensor::leaf(random_matrix(3, 2, rng), true);
    Tensor row = Tensor::leaf(random_matrix(1, 3, rng), true);
    std::vector<Tensor> ab{a, b};
    std::vector<Tensor> aw{a, w};
    std::vector<Tensor> ar{a, row};
    std::vector<Tensor> only_a{a};

    CHECK(max_gradient_error(aw, [&] { return sum_all(matmul(a, w)); }) <= 1e-6);
    CHECK(max_gradient_error(ab, [&] { return sum_all(mul(add(a, b), sub(a, b))); }) <= 1e-6);
    CHECK(max_gradient_error(ar, [&] { return sum_all(mul(add(a, row), add(a, row))); }) <= 1e-6);
    CHECK(max_gradient_error(only_a, [&] { return sum_all(mul(relu(a), relu(a))); }) <= 1e-6);
    CHECK(max_gradient_error(only_a, [&] { return sum_all(exp(scale(a, 0.5))); }) <= 1e-6);
    CHECK(max_gradient_error(only_a, [&] { return sum_all(log(affine(a, 0.2, 3.0))); }) <= 1e-6);
    CHECK(max_gradient_error(ab, [&] { return sum_all(mul(concat_cols(a, b), concat_cols(b, a))); }) <=
          1e-6);
    CHECK(max_gradient_error(only_a, [&] { return sum_all(mul(sum_rows(a), sum_rows(a))); }) <= 1e-6);
    CHECK(max_gradient_error(only_a, [&] {
            Tensor n = l2_normalize_rows(a);
            return sum_all(mul(n, exp(n)));
          }) <= 1e-6);
    CHECK(max_gradient_error(only_a, [&] {
            return sum_all(mul(softmax_rows(a), affine(a, 1.0, 0.5)));
          }) <= 1e-6);
    CHECK(max_gradient_error(only_a, [&] { return sum_all(pick_per_row(log_softmax_rows(a), {0, 2, 1, 0})); }) <=
          1e-6);
    CHECK(max_gradient_error(ab, [&] {
            return sum_all(mul(stack_rows({sum_rows(a), sum_rows(b)}),
                               stack_rows({sum_rows(b), sum_rows(a)})));
          }) <= 1e-6);
  }
}

TEST_CASE("composite MLP gradient matches finite differences") {
  auto rng = make_rng(7);
  Tensor x = Tensor::leaf(random_matrix(4, 3, rng), false);
  Tensor w1 = Tensor::leaf(random_matrix(3, 5, rng), true);
  Tensor b1 = Tensor::leaf(random_matrix(1, 5, rng), true);
  Tensor w2 = Tensor::leaf(random_matrix(5, 2, rng), true);
  std::vector<Tensor> params{w1, b1, w2};
  const double err = max_gradient_error(params, [&] {
    Tensor h = relu(add(matmul(x, w1), b1));
    Tensor out = matmul(h, w2);
    return sum_all(mul(out, out));
  });
  CHECK(err <= 1e-6);
}

TEST_CASE("no silent NaN") {
  Tensor x = Tensor::leaf(Mat::Constant(1, 1, 710.0), false);
  CHECK_THROWS_AS(exp(x), NumericalError);  // exp(710) overflows to inf
  CHECK_THROWS_AS(Tensor::leaf(Mat::Constant(1, 1, std::nan("")), false), NumericalError);
}

TEST_CASE("adam") {
  SUBCASE("first step moves a parameter by about -lr for positive gradient") {
    Tensor p = Tensor::leaf(Mat::Constant(1, 1, 1.0), true);
    Adam opt({p}, {0.1});
    {
      Tape tape;
      backward(scale(p, 2.0));  // gradient 2
    }
    opt.step();
    CHECK(p.value()(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(opt.step_count() == 1);
    CHECK_FALSE(p.has_grad());  // grads consumed
  }
  SUBCASE("zero gradient leaves the parameter unchanged") {
    Tensor p = Tensor::leaf(Mat::Constant(1, 1, 3.0), true);
    Adam opt({p}, {0.1});
    p.ensure_grad();
    opt.step();
    CHECK(p.value()(0, 0) == 3.0);
  }
  SUBCASE("missing gradient raises StateError") {
    Tensor p = Tensor::leaf(Mat::Constant(1, 1, 3.0), true);
    Adam opt({p}, {0.1});
    CHECK_THROWS_AS(opt.step(), StateError);
  }
  SUBCASE("100 steps on f(x) = x^2 from x = 1 reach |x| < 0.05") {
    Tensor x = Tensor::leaf(Mat::Constant(1, 1, 1.0), true);
    Adam opt({x}, {0.1});
    for (int i = 0; i < 100; ++i) {
      Tape tape;
      backward(mul(x, x));
      opt.step();
    }
    CHECK(std::abs(x.value()(0, 0)) < 0.05);
  }
}

TEST_CASE("NoGrad suspends recording") {
  Tensor x = Tensor::leaf(Mat::Ones(1, 2), true);
  Tape tape;
  Tensor on_tape = mul(x, x);
  CHECK(on_tape.requires_grad());
  {
    NoGrad guard;
    Tensor off_tape = mul(x, x);
    CHECK_FALSE(off_tape.requires_grad());
  }
  CHECK(tape.size() == 1);
}
