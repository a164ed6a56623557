#pragma once

#include "lkad/lka.hpp"
#include "lkad/ops.hpp"
#include "lkad/params.hpp"
#include "lkad/upsampler.hpp"

namespace lkad {

struct DepthNetConfig {
  std::vector<int> channels = {16, 32, 64, 128};  // encoder plan, shallow→deep
  bool use_lka = true;
  bool use_offset_upsampler = true;
  real min_depth = 0.1;   // meters, network-internal range
  real max_depth = 100.0;
  int lka_dw_kernel = 5;
  int lka_dwd_kernel = 7;
  int lka_dilation = 3;
};

/// Encoder output; level s (1-based) has shape [C_s, H/2^s, W/2^s].
struct MultiScaleFeatures {
  std::vector<Tensor> levels;
};

/// Disparity maps at scales 0..3, values strictly in (0,1).
struct DisparityPyramid {
  std::vector<Tensor> disps;
};

/// disp in (0,1) -> metric depth in (min_depth, max_depth), strictly
/// decreasing in disp.
inline Tensor disp_to_depth(const Tensor& disp, real min_depth = 0.1,
                            real max_depth = 100.0) {
  const real lo = 1.0 / max_depth, hi = 1.0 / min_depth;
  return reciprocal(affine(disp, hi - lo, lo));
}

struct ParamReport {
  long total = 0;
  long encoder = 0;
  long pose = 0;
  long lka = 0;
  long upsampler = 0;
};

/// Depth network: small scratch multi-scale encoder plus the decoder that
/// fuses each encoder level with upsampled deeper features through LKA and
/// emits sigmoid disparity at four scales.
struct DepthNet {
  DepthNetConfig cfg;
  std::vector<ConvSpec> enc_a, enc_b;      // stride-2 then stride-1 per stage
  std::vector<ConvSpec> dec_proj;          // 3x3 on feats[s], s = 1..3
  std::vector<UpsamplerParams> upsamplers; // deep→shallow: x4, x3, x2, x1
  std::vector<LkaParams> lkas;             // s = 3, 2, 1 (when enabled)
  std::vector<ConvSpec> fuse_convs;        // 1x1+ELU fallback (when LKA off)
  std::vector<ConvSpec> disp_heads;        // scales 3, 2, 1, 0
  ParamStore params;

  static DepthNet build(const DepthNetConfig& cfg, uint64_t seed) {
    if (cfg.channels.size() != 4)
      throw std::invalid_argument("DepthNet: channel plan must have 4 levels");
    NormalSampler rng(seed);
    DepthNet net;
    net.cfg = cfg;
    auto conv3 = [&](const std::string& name, int in_c, int out_c, int stride) {
      ConvSpec c;
      c.weight = net.params.add(name + ".weight",
                                he_normal(rng, {out_c, in_c, 3, 3},
                                          static_cast<long>(in_c) * 9));
      c.bias = net.params.add(name + ".bias", Tensor::zeros({out_c}));
      c.stride_h = c.stride_w = stride;
      c.pad_h = c.pad_w = 1;
      return c;
    };
    auto conv1 = [&](const std::string& name, int in_c, int out_c) {
      ConvSpec c;
      c.weight = net.params.add(name + ".weight",
                                he_normal(rng, {out_c, in_c, 1, 1},
                                          static_cast<long>(in_c)));
      c.bias = net.params.add(name + ".bias", Tensor::zeros({out_c}));
      return c;
    };
    int in_c = 3;
    for (int s = 0; s < 4; ++s) {
      const int c = cfg.channels[s];
      net.enc_a.push_back(conv3("enc" + std::to_string(s + 1) + "a", in_c, c, 2));
      net.enc_b.push_back(conv3("enc" + std::to_string(s + 1) + "b", c, c, 1));
      in_c = c;
    }
    // Fused feature widths, deepest first: x4 = C4, then
    // width(x_s) = C_s + width(x_{s+1}).
    std::vector<int> widths(4);
    widths[3] = cfg.channels[3];
    for (int s = 2; s >= 0; --s) widths[s] = cfg.channels[s] + widths[s + 1];
    for (int s = 3; s >= 1; --s)
      net.dec_proj.push_back(conv3("dec" + std::to_string(s) + ".proj",
                                   cfg.channels[s - 1], cfg.channels[s - 1], 1));
    // Upsamplers on x4..x1 (last one feeds the full-resolution head).
    for (int s = 3; s >= 0; --s) {
      if (cfg.use_offset_upsampler)
        net.upsamplers.push_back(make_upsampler_params(
            &net.params, "up" + std::to_string(s + 1), widths[s]));
      if (s >= 1) {
        if (cfg.use_lka)
          net.lkas.push_back(make_lka_params(
              &net.params, "lka" + std::to_string(s), rng, widths[s - 1],
              cfg.lka_dw_kernel, cfg.lka_dwd_kernel, cfg.lka_dilation));
        else
          net.fuse_convs.push_back(conv1("fuse" + std::to_string(s),
                                         widths[s - 1], widths[s - 1]));
      }
    }
    for (int s = 3; s >= 1; --s)
      net.disp_heads.push_back(
          conv3("disp" + std::to_string(s) + ".head", widths[s - 1], 1, 1));
    net.disp_heads.push_back(conv3("disp0.head", widths[0], 1, 1));
    return net;
  }

  MultiScaleFeatures encoder_forward(const Tensor& image) const {
    if (image.rank() != 3 || image.extent(0) != 3)
      throw std::invalid_argument("encoder_forward expects [3,H,W]");
    if (image.extent(1) % 16 != 0 || image.extent(2) % 16 != 0)
      throw std::invalid_argument("encoder_forward: extents must be divisible by 16");
    MultiScaleFeatures feats;
    Tensor x = image;
    for (int s = 0; s < 4; ++s) {
      x = elu(conv2d(x, enc_a[s]));
      x = elu(conv2d(x, enc_b[s]));
      feats.levels.push_back(x);
    }
    return feats;
  }

  Tensor upsample2(const Tensor& x, int stage_from_deep) const {
    if (cfg.use_offset_upsampler)
      return offset_upsample(x, upsamplers[stage_from_deep]);
    return bilinear_resize(x, 2);
  }

  DisparityPyramid decoder_forward(const MultiScaleFeatures& feats) const {
    if (feats.levels.size() != 4)
      throw std::invalid_argument("decoder_forward: expected 4 levels");
    DisparityPyramid out;
    out.disps.resize(4);
    Tensor x = feats.levels[3];  // deepest
    for (int s = 3; s >= 1; --s) {
      const int i = 3 - s;  // deep-first index
      Tensor fused = concat_channels(elu(conv2d(feats.levels[s - 1], dec_proj[i])),
                                     upsample2(x, i));
      x = cfg.use_lka ? lka_forward(fused, lkas[i])
                      : elu(conv2d(fused, fuse_convs[i]));
      out.disps[s] = sigmoid(conv2d(x, disp_heads[i]));
    }
    Tensor full = upsample2(x, 3);
    out.disps[0] = sigmoid(conv2d(full, disp_heads[3]));
    return out;
  }

  DisparityPyramid forward(const Tensor& image) const {
    return decoder_forward(encoder_forward(image));
  }

  long encoder_param_count() const {
    long n = 0;
    for (const auto& c : enc_a) n += conv_param_count(c);
    for (const auto& c : enc_b) n += conv_param_count(c);
    return n;
  }

  ParamReport param_report() const {
    ParamReport r;
    r.total = params.total_count();
    r.encoder = encoder_param_count();
    for (const auto& p : lkas) r.lka += lka_param_count(p);
    for (const auto& p : upsamplers) r.upsampler += upsampler_param_count(p);
    return r;
  }

  /// Analytic multiply-accumulate count for one forward at the given input
  /// resolution.
  long mac_count(int h, int w) const {
    long macs = 0;
    std::vector<std::pair<int, int>> dims;  // per level
    int hh = h, ww = w;
    for (int s = 0; s < 4; ++s) {
      macs += conv_macs(enc_a[s], hh, ww);
      hh /= 2;
      ww /= 2;
      macs += conv_macs(enc_b[s], hh, ww);
      dims.emplace_back(hh, ww);
    }
    for (int s = 3; s >= 1; --s) {
      const int i = 3 - s;
      auto [lh, lw] = dims[s - 1];
      macs += conv_macs(dec_proj[i], lh, lw);
      if (cfg.use_offset_upsampler)
        macs += upsampler_macs(upsamplers[i], dims[s].first, dims[s].second);
      if (cfg.use_lka)
        macs += lka_macs(lkas[i], lh, lw);
      else
        macs += conv_macs(fuse_convs[i], lh, lw);
      macs += conv_macs(disp_heads[i], lh, lw);
    }
    if (cfg.use_offset_upsampler)
      macs += upsampler_macs(upsamplers[3], dims[0].first, dims[0].second);
    macs += conv_macs(disp_heads[3], h, w);
    return macs;
  }
};

}  // namespace lkad
