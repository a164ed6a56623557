#pragma once

#include "lkad/ops.hpp"
#include "lkad/params.hpp"

namespace lkad {

/// Learned 2x upsampler: a per-pixel linear map predicts sub-pixel sampling
/// offsets which perturb the bilinear grid. Zero-initialized parameters make
/// it exactly bilinear upsampling.
struct UpsamplerParams {
  ConvSpec offset_proj;  // 1x1 conv, C -> 2*r*r channels
  int r = 2;

  int channels() const { return offset_proj.in_channels(); }

  void validate() const {
    offset_proj.validate();
    if (offset_proj.kernel_h() != 1 || offset_proj.kernel_w() != 1 ||
        offset_proj.groups != 1)
      throw std::invalid_argument("UpsamplerParams: offset_proj must be 1x1");
    if (offset_proj.out_channels() != 2 * r * r)
      throw std::invalid_argument("UpsamplerParams: outC must be 2*r^2");
  }
};

/// Zero-initialized by design: training starts from exact bilinear behavior.
inline UpsamplerParams make_upsampler_params(ParamStore* store,
                                             const std::string& prefix, int c,
                                             int r = 2) {
  UpsamplerParams p;
  p.r = r;
  auto reg = [&](const std::string& name, Tensor t) {
    return store ? store->add(prefix + name, t) : t;
  };
  p.offset_proj.weight = reg(".offset_proj.weight",
                             Tensor::zeros({2 * r * r, c, 1, 1}));
  p.offset_proj.bias = reg(".offset_proj.bias", Tensor::zeros({2 * r * r}));
  p.validate();
  return p;
}

/// The learned sampling grid: pixel_shuffle(0.25 * offset_proj(f_in), r)
/// added to the half-pixel identity grid. Offsets are in source-pixel units.
inline SampleGrid offset_grid(const Tensor& f_in, const UpsamplerParams& params) {
  params.validate();
  if (f_in.rank() != 3 || f_in.extent(0) != params.channels())
    throw std::invalid_argument("offset_upsample: channel mismatch");
  Tensor offsets =
      pixel_shuffle(affine(conv2d(f_in, params.offset_proj), 0.25, 0.0), params.r);
  SampleGrid base = make_identity_grid(f_in.extent(1), f_in.extent(2), params.r);
  return SampleGrid{offsets + base.coords};
}

inline Tensor offset_upsample(const Tensor& f_in, const UpsamplerParams& params) {
  return grid_sample(f_in, offset_grid(f_in, params));
}

inline long upsampler_param_count(const UpsamplerParams& p) {
  return conv_param_count(p.offset_proj);
}

inline long upsampler_macs(const UpsamplerParams& p, int h, int w) {
  return conv_macs(p.offset_proj, h, w);
}

}  // namespace lkad
