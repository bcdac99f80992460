#include <doctest.h>

#include <random>

#include "linmar/ops.hpp"
#include "linmar/tape.hpp"
#include "test_utils.hpp"

using namespace linmar;
using test_util::bitwise_equal;
using test_util::randn;

TEST_CASE("tensor construction and shape checks") {
  Tensord t = Tensord::from_list({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.at(1, 2) == 6);
  CHECK_THROWS_AS(Tensord::from_vector({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  CHECK_THROWS_AS(Tensord::zeros({-1, 2}), DimensionError);
  CHECK_THROWS_AS(t.value(), DimensionError);
  CHECK(Tensord::scalar(4.5).value() == 4.5);
}

TEST_CASE("matmul matches a hand-rolled triple loop") {
  std::mt19937_64 rng(11);
  Tensord a = randn({4, 3}, rng), b = randn({3, 5}, rng);
  Tensord c = matmul(a, b);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 5; ++j) {
      double s = 0;
      for (Index k = 0; k < 3; ++k) s += a.at(i, k) * b.at(k, j);
      CHECK(c.at(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
  CHECK_THROWS_AS(matmul(a, a), DimensionError);
}

TEST_CASE("softmax rows are a probability distribution and reject non-finite input") {
  std::mt19937_64 rng(12);
  Tensord a = randn({6, 9}, rng, 3.0);
  Tensord s = softmax_rows(a);
  for (Index i = 0; i < 6; ++i) {
    double row = 0;
    for (Index j = 0; j < 9; ++j) {
      CHECK(s.at(i, j) >= 0);
      row += s.at(i, j);
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }
  a.at(2, 3) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(softmax_rows(a), NumericError);
}

TEST_CASE("softmax is shift-invariant per row") {
  std::mt19937_64 rng(13);
  Tensord a = randn({3, 4}, rng);
  Tensord shifted = add_scalar(a, 123.0);
  CHECK(test_util::max_abs(softmax_rows(a), softmax_rows(shifted)) < 1e-12);
}

TEST_CASE("rmsnorm rows have unit rms under a unit gain") {
  std::mt19937_64 rng(14);
  Tensord a = randn({5, 8}, rng, 2.5);
  Tensord g = Tensord::ones({1, 8});
  Tensord y = rmsnorm(a, g);
  for (Index i = 0; i < 5; ++i) {
    double ms = 0;
    for (Index j = 0; j < 8; ++j) ms += y.at(i, j) * y.at(i, j);
    CHECK(std::sqrt(ms / 8) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("slice, gather, scatter, and concat round-trip") {
  std::mt19937_64 rng(15);
  Tensord a = randn({6, 3}, rng);
  Tensord top = slice_rows(a, 0, 2), rest = slice_rows(a, 2, 4);
  CHECK(bitwise_equal(concat_rows<double>({top, rest}), a));
  Tensord left = slice_cols(a, 0, 1), right = slice_cols(a, 1, 2);
  CHECK(bitwise_equal(concat_cols<double>({left, right}), a));

  std::vector<Index> idx = {4, 1, 3};
  Tensord g = gather_rows(a, idx);
  for (size_t r = 0; r < idx.size(); ++r)
    for (Index c = 0; c < 3; ++c) CHECK(g.at(static_cast<Index>(r), c) == a.at(idx[r], c));
  Tensord back = scatter_rows(a, idx, g);
  CHECK(bitwise_equal(back, a));
  CHECK_THROWS_AS(gather_rows(a, std::vector<Index>{6}), DimensionError);
}

TEST_CASE("tape gradients for a composite expression match finite differences") {
  std::mt19937_64 rng(16);
  Tensord a0 = randn({3, 4}, rng), b0 = randn({4, 2}, rng);
  auto loss_of = [](const Tensord& a, const Tensord& b) {
    return mse(silu(matmul(a, b)), Tensord::ones({3, 2})).value();
  };
  Taped tape;
  Tensord a = tape.watch(a0), b = tape.watch(b0);
  tape.backward(mse(silu(matmul(a, b)), Tensord::ones({3, 2})));
  Tensord ga = tape.grad(a), gb = tape.grad(b);

  double step = 1e-6;
  for (Index i = 0; i < a0.numel(); ++i) {
    Tensord p = a0.detached();
    p.data[i] += step;
    Tensord m = a0.detached();
    m.data[i] -= step;
    double want = (loss_of(p, b0) - loss_of(m, b0)) / (2 * step);
    CHECK(ga.data[i] == doctest::Approx(want).epsilon(1e-5));
  }
  for (Index i = 0; i < b0.numel(); ++i) {
    Tensord p = b0.detached();
    p.data[i] += step;
    Tensord m = b0.detached();
    m.data[i] -= step;
    double want = (loss_of(a0, p) - loss_of(a0, m)) / (2 * step);
    CHECK(gb.data[i] == doctest::Approx(want).epsilon(1e-5));
  }
}

TEST_CASE("gradients accumulate across reuse of the same leaf") {
  Taped tape;
  Tensord x = tape.watch(Tensord::from_list({2}, {3.0, -1.0}));
  // loss = sum(x*x + 2x) -> d/dx = 2x + 2
  tape.backward(sum(add(mul(x, x), scale(x, 2.0))));
  Tensord g = tape.grad(x);
  CHECK(g.data[0] == doctest::Approx(8.0));
  CHECK(g.data[1] == doctest::Approx(0.0));
}

TEST_CASE("mixing tensors from two tapes is refused") {
  Taped t1, t2;
  Tensord a = t1.watch(Tensord::ones({2, 2}));
  Tensord b = t2.watch(Tensord::ones({2, 2}));
  CHECK_THROWS_AS(add(a, b), ContractError);
}

TEST_CASE("backward demands a tracked scalar loss") {
  Taped tape;
  Tensord x = tape.watch(Tensord::ones({2, 2}));
  CHECK_THROWS_AS(tape.backward(Tensord::scalar(1.0)), ContractError);
  CHECK_THROWS_AS(tape.backward(add(x, x)), ContractError);
}

TEST_CASE("kernel maps: relu clips, elu_plus_one is positive and hits 1 at 0") {
  Tensord x = Tensord::from_list({1, 5}, {-2.0, -0.5, 0.0, 0.5, 2.0});
  Tensord r = relu(x);
  CHECK(r.data[0] == 0.0);
  CHECK(r.data[4] == 2.0);
  Tensord e = elu_plus_one(x);
  for (Index i = 0; i < 5; ++i) CHECK(e.data[i] > 0.0);
  CHECK(e.data[2] == doctest::Approx(1.0));
  CHECK(e.data[4] == doctest::Approx(3.0));  // identity + 1 above zero
}
