#include <catch2/catch_amalgamated.hpp>

#include "lkad/checks.hpp"
#include "lkad/upsampler.hpp"

using namespace lkad;

TEST_CASE("upsampler verification suite") {
  for (const CheckResult& r : checks::suite_upsampler()) {
    INFO(r.name);
    CHECK(r.pass());
  }
}

TEST_CASE("offset_upsample output shape") {
  NormalSampler rng(31);
  UpsamplerParams p = make_upsampler_params(nullptr, "u", 3);
  Tensor x = checks::randn(rng, {3, 5, 7});
  CHECK(offset_upsample(x, p).shape() == Shape{3, 10, 14});
}

TEST_CASE("offset grid starts at the half-pixel identity") {
  UpsamplerParams p = make_upsampler_params(nullptr, "u", 2);
  Tensor x = Tensor::zeros({2, 3, 3});
  SampleGrid g = offset_grid(x, p);
  SampleGrid id = make_identity_grid(3, 3, 2);
  for (long i = 0; i < g.coords.numel(); ++i)
    CHECK(g.coords.data()[i] == id.coords.data()[i]);
}

TEST_CASE("upsampler parameter count and validation") {
  UpsamplerParams p = make_upsampler_params(nullptr, "u", 6);
  CHECK(upsampler_param_count(p) == 8 * 6 + 8);  // 2*r^2 rows of C plus bias
  p.offset_proj.weight = Tensor::zeros({7, 6, 1, 1});
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("channel mismatch is rejected") {
  UpsamplerParams p = make_upsampler_params(nullptr, "u", 3);
  CHECK_THROWS_AS(offset_upsample(Tensor::zeros({2, 4, 4}), p),
                  std::invalid_argument);
}
