#pragma once

#include "lkad/ops.hpp"
#include "lkad/params.hpp"

namespace lkad {

/// Large-kernel attention parameters: depthwise conv, dilated depthwise
/// conv, and a 1x1 channel-mixing conv, each padded so spatial extents are
/// preserved. Defaults are 5x5 + 7x7 dilation 3 + 1x1.
struct LkaParams {
  ConvSpec dw;   // depthwise, dilation 1
  ConvSpec dwd;  // depthwise, dilated
  ConvSpec pw;   // 1x1, groups 1

  int channels() const { return pw.in_channels(); }

  /// Spatial extent of the composed dw/dwd linear operator.
  int effective_extent() const {
    return dw.kernel_h() + dwd.dilation_h * (dwd.kernel_h() - 1);
  }

  void validate() const {
    dw.validate();
    dwd.validate();
    pw.validate();
    const int c = channels();
    if (!dw.depthwise() || !dwd.depthwise())
      throw std::invalid_argument("LkaParams: dw and dwd must be depthwise");
    if (dw.in_channels() != c || dwd.in_channels() != c)
      throw std::invalid_argument("LkaParams: channel counts disagree");
    if (pw.groups != 1 || pw.kernel_h() != 1 || pw.kernel_w() != 1)
      throw std::invalid_argument("LkaParams: pw must be an ungrouped 1x1 conv");
    if (dw.pad_h * 2 != dw.kernel_h() - 1 ||
        dwd.pad_h * 2 != dwd.dilation_h * (dwd.kernel_h() - 1))
      throw std::invalid_argument("LkaParams: padding must preserve extents");
  }

  bool bias_free() const {
    for (const ConvSpec* s : {&dw, &dwd, &pw}) {
      if (!s->bias.defined()) continue;
      for (long i = 0; i < s->bias.numel(); ++i)
        if (s->bias.data()[i] != 0.0) return false;
    }
    return true;
  }
};

/// Builds LKA parameters for a block of width c. When store is non-null the
/// tensors are registered under the given prefix.
inline LkaParams make_lka_params(ParamStore* store, const std::string& prefix,
                                 NormalSampler& rng, int c, int dw_k = 5,
                                 int dwd_k = 7, int dwd_dilation = 3,
                                 bool with_bias = true) {
  auto reg = [&](const std::string& name, Tensor t) {
    return store ? store->add(prefix + name, t) : t;
  };
  LkaParams p;
  p.dw.weight = reg(".dw.weight", he_normal(rng, {c, 1, dw_k, dw_k},
                                            static_cast<long>(dw_k) * dw_k));
  if (with_bias) p.dw.bias = reg(".dw.bias", Tensor::zeros({c}));
  p.dw.groups = c;
  p.dw.pad_h = p.dw.pad_w = (dw_k - 1) / 2;

  p.dwd.weight = reg(".dwd.weight", he_normal(rng, {c, 1, dwd_k, dwd_k},
                                              static_cast<long>(dwd_k) * dwd_k));
  if (with_bias) p.dwd.bias = reg(".dwd.bias", Tensor::zeros({c}));
  p.dwd.groups = c;
  p.dwd.dilation_h = p.dwd.dilation_w = dwd_dilation;
  p.dwd.pad_h = p.dwd.pad_w = dwd_dilation * (dwd_k - 1) / 2;

  p.pw.weight = reg(".pw.weight", he_normal(rng, {c, c, 1, 1}, c));
  if (with_bias) p.pw.bias = reg(".pw.bias", Tensor::zeros({c}));
  p.validate();
  return p;
}

/// Attention map times input: pw(dwd(dw(f_in))) applied elementwise to f_in.
/// No nonlinearity between the conv stages.
inline Tensor lka_forward(const Tensor& f_in, const LkaParams& params) {
  params.validate();
  if (f_in.rank() != 3 || f_in.extent(0) != params.channels())
    throw std::invalid_argument("lka_forward: channel mismatch");
  Tensor attention = conv2d(conv2d(conv2d(f_in, params.dw), params.dwd), params.pw);
  return attention * f_in;
}

/// Dense [C,C,K,K] kernel equal to the composed linear operator pw(dwd(dw(.))).
/// Defined for bias-free parameters; K = effective_extent(). Computed by
/// brute force: place dwd taps at their dilated offsets, convolve with dw
/// per channel, then mix channels through pw.
inline Tensor lka_effective_kernel(const LkaParams& params) {
  params.validate();
  if (!params.bias_free())
    throw std::invalid_argument("lka_effective_kernel: params must be bias-free");
  const int c = params.channels();
  const int k = params.effective_extent();
  const int dwk = params.dw.kernel_h(), dwdk = params.dwd.kernel_h();
  const int dil = params.dwd.dilation_h;
  // Per-channel composition of the two depthwise stages.
  std::vector<real> composed(static_cast<size_t>(c) * k * k, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    const real* a = params.dw.weight.data() + static_cast<long>(ch) * dwk * dwk;
    const real* b = params.dwd.weight.data() + static_cast<long>(ch) * dwdk * dwdk;
    real* out = composed.data() + static_cast<long>(ch) * k * k;
    for (int ay = 0; ay < dwk; ++ay)
      for (int ax = 0; ax < dwk; ++ax)
        for (int by = 0; by < dwdk; ++by)
          for (int bx = 0; bx < dwdk; ++bx)
            out[(ay + dil * by) * k + (ax + dil * bx)] +=
                a[ay * dwk + ax] * b[by * dwdk + bx];
  }
  Tensor eff = Tensor::zeros({c, c, k, k});
  const real* pw = params.pw.weight.data();
  for (int co = 0; co < c; ++co)
    for (int ci = 0; ci < c; ++ci) {
      const real m = pw[static_cast<long>(co) * c + ci];
      const real* src = composed.data() + static_cast<long>(ci) * k * k;
      real* dst = eff.data() + (static_cast<long>(co) * c + ci) * k * k;
      for (int i = 0; i < k * k; ++i) dst[i] = m * src[i];
    }
  return eff;
}

inline long lka_param_count(const LkaParams& p) {
  return conv_param_count(p.dw) + conv_param_count(p.dwd) + conv_param_count(p.pw);
}

inline long lka_macs(const LkaParams& p, int h, int w) {
  return conv_macs(p.dw, h, w) + conv_macs(p.dwd, h, w) + conv_macs(p.pw, h, w);
}

}  // namespace lkad
