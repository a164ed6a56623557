#include <catch2/catch_amalgamated.hpp>

#include "lkad/gradcheck.hpp"
#include "lkad/tensor.hpp"

using namespace lkad;

TEST_CASE("elementwise ops and suffix broadcasting") {
  Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from_data({3}, {10, 20, 30});
  Tensor c = a + b;
  CHECK(c.at({0, 0}) == 11);
  CHECK(c.at({1, 2}) == 36);
  Tensor s = a * Tensor::scalar(2.0);
  CHECK(s.at({1, 1}) == 10);
  CHECK_THROWS_AS(a + Tensor::from_data({2}, {1, 2}), std::invalid_argument);
}

TEST_CASE("copying a tensor aliases storage") {
  Tensor a = Tensor::zeros({4});
  Tensor b = a;
  b.data()[2] = 7;
  CHECK(a.data()[2] == 7);
  CHECK(a.node_id() == b.node_id());
  CHECK(a.detach_copy().node_id() != a.node_id());
}

TEST_CASE("repeated operand use accumulates gradient") {
  Tensor x = Tensor::from_data({3}, {1, 2, 3}, true);
  Tape tape;
  Tensor loss = sum(x * x);
  tape.backward(loss);
  CHECK(x.grad()[0] == Catch::Approx(2.0));
  CHECK(x.grad()[2] == Catch::Approx(6.0));
}

TEST_CASE("repeated backward calls accumulate") {
  Tensor x = Tensor::from_data({2}, {3, 4}, true);
  Tape tape;
  Tensor loss = sum(x);
  tape.backward(loss);
  tape.backward(loss);
  CHECK(x.grad()[0] == Catch::Approx(2.0));
}

TEST_CASE("backward requires a scalar") {
  Tensor x = Tensor::from_data({2}, {1, 2}, true);
  Tape tape;
  Tensor y = x * x;
  CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
}

TEST_CASE("min_over_axis routes gradient to lowest-index argmin") {
  Tensor a = Tensor::from_data({2, 2}, {5, 1, 5, 1}, true);
  Tape tape;
  Tensor m = min_over_axis(a, 0);  // both rows equal -> row 0 wins
  tape.backward(sum(m));
  CHECK(a.grad()[0] == 1.0);
  CHECK(a.grad()[1] == 1.0);
  CHECK(a.grad()[2] == 0.0);
  CHECK(a.grad()[3] == 0.0);
}

TEST_CASE("reductions match hand values") {
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  CHECK(sum(a).value() == 10);
  CHECK(mean(a).value() == 2.5);
  Tensor m = min_over_axis(a, 1);
  CHECK(m.data()[0] == 1);
  CHECK(m.data()[1] == 3);
  Tensor c = mean_over_axis0(a);
  CHECK(c.data()[0] == 2);
  CHECK(c.data()[1] == 3);
}

TEST_CASE("core op gradients pass finite differences") {
  std::mt19937_64 rng(5);
  auto randv = [&](long n) {
    std::vector<real> v(n);
    for (real& x : v) x = (static_cast<real>(rng() >> 11) * 0x1.0p-53) * 2 - 1;
    return v;
  };
  SECTION("binary arithmetic") {
    Tensor a = Tensor::from_data({2, 3}, randv(6));
    Tensor b = Tensor::from_data({3}, {0.7, -1.3, 2.1});
    auto f = [](const std::vector<Tensor>& v) {
      return sum(v[0] * v[1] + v[0] / v[1] - v[1]);
    };
    CHECK(grad_check(f, {a, b}) < 1e-4);
  }
  SECTION("unary chain") {
    Tensor a = Tensor::from_data({4}, {0.2, 0.5, 1.1, 2.0});
    auto f = [](const std::vector<Tensor>& v) {
      return sum(exp_t(affine(log_t(v[0]), 0.5, 0.1)) + sqrt_t(v[0]) +
                 sin_t(v[0]) * cos_t(v[0]) + reciprocal(v[0]));
    };
    CHECK(grad_check(f, {a}) < 1e-4);
  }
  SECTION("matmul / add_colvec / slice / reshape / concat / skew") {
    Tensor a = Tensor::from_data({3, 4}, randv(12));
    Tensor b = Tensor::from_data({4, 2}, randv(8));
    Tensor v = Tensor::from_data({3}, randv(3));
    auto f = [](const std::vector<Tensor>& in) {
      Tensor m = add_colvec(matmul(in[0], in[1]), in[2]);
      Tensor top = slice_rows(m, 0, 2);
      Tensor w = reshape(slice_rows(m, 0, 1), {2});
      Tensor k = skew(concat_axis0(w, reshape(sum(top), {1})));
      return sum(matmul(k, k));
    };
    CHECK(grad_check(f, {a, b, v}) < 1e-4);
  }
  SECTION("clamp passes gradient only inside the interval") {
    Tensor a = Tensor::from_data({3}, {-2.0, 0.3, 5.0}, true);
    Tape tape;
    tape.backward(sum(clamp(a, 0.0, 1.0)));
    CHECK(a.grad()[0] == 0.0);
    CHECK(a.grad()[1] == 1.0);
    CHECK(a.grad()[2] == 0.0);
  }
}

TEST_CASE("flat_index round trip") {
  Shape s{3, 4, 5};
  for (long k = 0; k < 60; ++k)
    CHECK(flat_index(s, unflat_index(s, k)) == k);
}
