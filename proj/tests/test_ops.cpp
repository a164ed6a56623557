#include <catch2/catch_amalgamated.hpp>

#include "lkad/checks.hpp"
#include "lkad/ops.hpp"

using namespace lkad;

TEST_CASE("conv2d equals the six-loop reference exactly") {
  CHECK(checks::conv_oracle_worst() == 0.0);
}

TEST_CASE("conv2d is linear in its input") {
  NormalSampler rng(9);
  ConvSpec s;
  s.weight = checks::randn(rng, {4, 3, 3, 3});
  s.pad_h = s.pad_w = 1;
  Tensor x = checks::randn(rng, {3, 6, 7});
  Tensor y = checks::randn(rng, {3, 6, 7});
  Tensor lhs = conv2d(affine(x, 2.0, 0.0) + y, s);
  Tensor rhs = affine(conv2d(x, s), 2.0, 0.0) + conv2d(y, s);
  for (long i = 0; i < lhs.numel(); ++i)
    CHECK(lhs.data()[i] == Catch::Approx(rhs.data()[i]).margin(1e-12));
}

TEST_CASE("conv2d validates shapes") {
  ConvSpec s;
  s.weight = Tensor::zeros({4, 3, 3, 3});
  CHECK_THROWS_AS(conv2d(Tensor::zeros({2, 5, 5}), s), std::invalid_argument);
  s.groups = 3;
  CHECK_THROWS_AS(conv2d(Tensor::zeros({3, 5, 5}), s), std::invalid_argument);
  ConvSpec tiny;
  tiny.weight = Tensor::zeros({1, 1, 5, 5});
  CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 3, 3}), tiny), std::invalid_argument);
}

TEST_CASE("batched conv2d matches per-sample conv2d") {
  NormalSampler rng(10);
  ConvSpec s;
  s.weight = checks::randn(rng, {2, 3, 3, 3});
  s.bias = checks::randn(rng, {2});
  s.pad_h = s.pad_w = 1;
  Tensor batch = checks::randn(rng, {2, 3, 5, 6});
  Tensor out = conv2d(batch, s);
  for (int b = 0; b < 2; ++b) {
    Tensor one = Tensor::zeros({3, 5, 6});
    std::copy(batch.data() + b * 90, batch.data() + (b + 1) * 90, one.data());
    Tensor ref = conv2d(one, s);
    for (long i = 0; i < ref.numel(); ++i)
      CHECK(out.data()[b * ref.numel() + i] == ref.data()[i]);
  }
}

TEST_CASE("pixel_shuffle permutation law and inverse") {
  NormalSampler rng(11);
  Tensor x = checks::randn(rng, {8, 3, 4});
  Tensor y = pixel_shuffle(x, 2);
  REQUIRE(y.shape() == Shape{2, 6, 8});
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j)
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj)
            CHECK(y.at({c, 2 * i + di, 2 * j + dj}) ==
                  x.at({c * 4 + di * 2 + dj, i, j}));
  Tensor back = pixel_unshuffle(y, 2);
  for (long i = 0; i < x.numel(); ++i) CHECK(back.data()[i] == x.data()[i]);
}

TEST_CASE("grid_sample at integer coordinates picks exact pixels") {
  NormalSampler rng(12);
  Tensor x = checks::randn(rng, {2, 4, 5});
  Tensor coords = Tensor::zeros({2, 4, 5});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j) {
      coords.at({0, i, j}) = j;
      coords.at({1, i, j}) = i;
    }
  Tensor y = grid_sample(x, SampleGrid{coords});
  for (long i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("grid_sample clamps out-of-range coordinates to the border") {
  Tensor x = Tensor::from_data({1, 2, 2}, {1, 2, 3, 4});
  Tensor coords = Tensor::from_data({2, 1, 2}, {-5, 10, -5, 10});
  Tensor y = grid_sample(x, SampleGrid{coords});
  CHECK(y.data()[0] == 1);  // clamped to (0,0)
  CHECK(y.data()[1] == 4);  // clamped to (1,1)
}

TEST_CASE("bilinear_resize is exact on linear ramps") {
  // A bilinear interpolant reproduces any affine function of (i, j) away
  // from the replicated border.
  const int h = 4, w = 5;
  Tensor x = Tensor::zeros({1, h, w});
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) x.at({0, i, j}) = 2.0 * i - 3.0 * j + 1.0;
  Tensor y = bilinear_resize(x, 2);
  REQUIRE(y.shape() == Shape{1, 2 * h, 2 * w});
  for (int i = 1; i < 2 * h - 1; ++i)
    for (int j = 1; j < 2 * w - 1; ++j) {
      const real si = (i + 0.5) / 2 - 0.5, sj = (j + 0.5) / 2 - 0.5;
      CHECK(y.at({0, i, j}) ==
            Catch::Approx(2.0 * si - 3.0 * sj + 1.0).margin(1e-12));
    }
}

TEST_CASE("activation values") {
  Tensor x = Tensor::from_data({3}, {-1.0, 0.0, 2.0});
  Tensor s = sigmoid(x);
  CHECK(s.data()[1] == Catch::Approx(0.5));
  CHECK(s.data()[2] == Catch::Approx(1.0 / (1.0 + std::exp(-2.0))));
  Tensor e = elu(x);
  CHECK(e.data()[0] == Catch::Approx(std::expm1(-1.0)));
  CHECK(e.data()[1] == 0.0);
  CHECK(e.data()[2] == 2.0);
  CHECK(activation(x, Activation::sigmoid).data()[1] == Catch::Approx(0.5));
}

TEST_CASE("spatial helpers on hand examples") {
  Tensor x = Tensor::from_data({1, 2, 3}, {1, 2, 4, 8, 16, 32});
  Tensor dx = diff_x(x);
  CHECK(dx.at({0, 0, 0}) == 1);
  CHECK(dx.at({0, 1, 1}) == 16);
  Tensor dy = diff_y(x);
  CHECK(dy.at({0, 0, 2}) == 28);
  Tensor c = Tensor::full({2, 3, 3}, 5.0);
  Tensor m = box_mean3(c);
  for (long i = 0; i < m.numel(); ++i) CHECK(m.data()[i] == Catch::Approx(5.0));
  Tensor p = Tensor::from_data({1, 2, 2}, {1, 2, 3, 4});
  CHECK(avg_pool2(p).value() == 2.5);
}

TEST_CASE("concat_channels stacks along the channel axis") {
  Tensor a = Tensor::full({2, 2, 2}, 1.0);
  Tensor b = Tensor::full({3, 2, 2}, 2.0);
  Tensor c = concat_channels(a, b);
  REQUIRE(c.shape() == Shape{5, 2, 2});
  CHECK(c.at({1, 1, 1}) == 1.0);
  CHECK(c.at({4, 0, 0}) == 2.0);
  CHECK_THROWS_AS(concat_channels(a, Tensor::zeros({1, 3, 2})),
                  std::invalid_argument);
}

TEST_CASE("nn op gradient suite") {
  for (const CheckResult& r : checks::suite_ops()) {
    INFO(r.name);
    CHECK(r.pass());
  }
}

TEST_CASE("analytic mac count matches a counted run") {
  ConvSpec s;
  s.weight = Tensor::zeros({4, 3, 3, 3});
  s.pad_h = s.pad_w = 1;
  s.stride_h = s.stride_w = 2;
  // 8x10 input, stride 2, pad 1 -> 4x5 output; 4*3*9 macs per output pixel.
  CHECK(conv_macs(s, 8, 10) == 4L * 3 * 9 * 4 * 5);
  CHECK(conv_param_count(s) == 4 * 3 * 9);
}
