#pragma once

#include <optional>

#include "lkad/tensor.hpp"

namespace lkad {

/// One convolution's weights and geometry. Weight layout is
/// [outC, inC/groups, kH, kW]; padding is zero-padding in pixels and the
/// convention is cross-correlation (no kernel flip).
struct ConvSpec {
  Tensor weight;
  Tensor bias;  // optional; undefined means no bias
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;
  int dilation_h = 1, dilation_w = 1;
  int groups = 1;

  int out_channels() const { return weight.extent(0); }
  int in_channels() const { return weight.extent(1) * groups; }
  int kernel_h() const { return weight.extent(2); }
  int kernel_w() const { return weight.extent(3); }

  bool depthwise() const {
    return groups == in_channels() && groups == out_channels() &&
           weight.extent(1) == 1;
  }

  void validate() const {
    if (!weight.defined() || weight.rank() != 4)
      throw std::invalid_argument("ConvSpec: weight must be [outC,inC/g,kH,kW]");
    if (groups < 1 || out_channels() % groups != 0)
      throw std::invalid_argument("ConvSpec: outC not divisible by groups");
    if (bias.defined() && bias.numel() != out_channels())
      throw std::invalid_argument("ConvSpec: bias length != outC");
    if (stride_h < 1 || stride_w < 1 || dilation_h < 1 || dilation_w < 1)
      throw std::invalid_argument("ConvSpec: stride/dilation must be >= 1");
  }
};

namespace detail {

struct ConvDims {
  int in_c, in_h, in_w, out_c, out_h, out_w;
};

inline ConvDims conv_output_dims(const Shape& in, const ConvSpec& s) {
  const int C = in[in.size() - 3], H = in[in.size() - 2], W = in[in.size() - 1];
  if (C != s.in_channels())
    throw std::invalid_argument("conv2d: input has " + std::to_string(C) +
                                " channels, spec expects " +
                                std::to_string(s.in_channels()));
  const int eff_kh = s.dilation_h * (s.kernel_h() - 1) + 1;
  const int eff_kw = s.dilation_w * (s.kernel_w() - 1) + 1;
  const int oh = (H + 2 * s.pad_h - eff_kh) / s.stride_h + 1;
  const int ow = (W + 2 * s.pad_w - eff_kw) / s.stride_w + 1;
  if (H + 2 * s.pad_h < eff_kh || W + 2 * s.pad_w < eff_kw || oh < 1 || ow < 1)
    throw std::invalid_argument("conv2d: zero-size output");
  return {C, H, W, s.out_channels(), oh, ow};
}

// Accumulates out += conv(in) for one sample, with per-tap valid ranges so
// the inner loops are branch-free.
inline void conv_forward_one(const real* in, real* out, const ConvSpec& s,
                             const ConvDims& d) {
  const int cig = d.in_c / s.groups;   // input channels per group
  const int cog = d.out_c / s.groups;  // output channels per group
  const int kh = s.kernel_h(), kw = s.kernel_w();
  const long in_plane = static_cast<long>(d.in_h) * d.in_w;
  const long out_plane = static_cast<long>(d.out_h) * d.out_w;
  const real* wt = s.weight.data();
  for (int g = 0; g < s.groups; ++g)
    for (int oc = 0; oc < cog; ++oc) {
      const int co = g * cog + oc;
      real* out_ch = out + co * out_plane;
      for (int ic = 0; ic < cig; ++ic) {
        const int ci = g * cig + ic;
        const real* in_ch = in + ci * in_plane;
        const real* wrow =
            wt + ((static_cast<long>(co) * cig + ic) * kh) * kw;
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx) {
            const real w = wrow[ky * kw + kx];
            if (w == 0.0) continue;
            const int off_y = ky * s.dilation_h - s.pad_h;
            const int off_x = kx * s.dilation_w - s.pad_w;
            // valid output x range: 0 <= ox*sw + off_x < in_w
            int x0 = off_x < 0 ? (-off_x + s.stride_w - 1) / s.stride_w : 0;
            int x1 = (d.in_w - 1 - off_x) / s.stride_w + 1;
            x1 = std::min(x1, d.out_w);
            if (x0 >= x1) continue;
            for (int oy = 0; oy < d.out_h; ++oy) {
              const int iy = oy * s.stride_h + off_y;
              if (iy < 0 || iy >= d.in_h) continue;
              const real* irow = in_ch + static_cast<long>(iy) * d.in_w;
              real* orow = out_ch + static_cast<long>(oy) * d.out_w;
              if (s.stride_w == 1) {
                for (int ox = x0; ox < x1; ++ox) orow[ox] += w * irow[ox + off_x];
              } else {
                for (int ox = x0; ox < x1; ++ox)
                  orow[ox] += w * irow[static_cast<long>(ox) * s.stride_w + off_x];
              }
            }
          }
      }
    }
}

// grad wrt input: scatter with the same valid-range structure.
inline void conv_backward_input_one(const real* gout, real* gin,
                                    const ConvSpec& s, const ConvDims& d) {
  const int cig = d.in_c / s.groups, cog = d.out_c / s.groups;
  const int kh = s.kernel_h(), kw = s.kernel_w();
  const long in_plane = static_cast<long>(d.in_h) * d.in_w;
  const long out_plane = static_cast<long>(d.out_h) * d.out_w;
  const real* wt = s.weight.data();
  for (int g = 0; g < s.groups; ++g)
    for (int oc = 0; oc < cog; ++oc) {
      const int co = g * cog + oc;
      const real* gout_ch = gout + co * out_plane;
      for (int ic = 0; ic < cig; ++ic) {
        const int ci = g * cig + ic;
        real* gin_ch = gin + ci * in_plane;
        const real* wrow = wt + ((static_cast<long>(co) * cig + ic) * kh) * kw;
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx) {
            const real w = wrow[ky * kw + kx];
            if (w == 0.0) continue;
            const int off_y = ky * s.dilation_h - s.pad_h;
            const int off_x = kx * s.dilation_w - s.pad_w;
            int x0 = off_x < 0 ? (-off_x + s.stride_w - 1) / s.stride_w : 0;
            int x1 = std::min((d.in_w - 1 - off_x) / s.stride_w + 1, d.out_w);
            if (x0 >= x1) continue;
            for (int oy = 0; oy < d.out_h; ++oy) {
              const int iy = oy * s.stride_h + off_y;
              if (iy < 0 || iy >= d.in_h) continue;
              real* irow = gin_ch + static_cast<long>(iy) * d.in_w;
              const real* grow = gout_ch + static_cast<long>(oy) * d.out_w;
              if (s.stride_w == 1) {
                for (int ox = x0; ox < x1; ++ox) irow[ox + off_x] += w * grow[ox];
              } else {
                for (int ox = x0; ox < x1; ++ox)
                  irow[static_cast<long>(ox) * s.stride_w + off_x] += w * grow[ox];
              }
            }
          }
      }
    }
}

inline void conv_backward_weight_one(const real* in, const real* gout,
                                     real* gw, const ConvSpec& s,
                                     const ConvDims& d) {
  const int cig = d.in_c / s.groups, cog = d.out_c / s.groups;
  const int kh = s.kernel_h(), kw = s.kernel_w();
  const long in_plane = static_cast<long>(d.in_h) * d.in_w;
  const long out_plane = static_cast<long>(d.out_h) * d.out_w;
  for (int g = 0; g < s.groups; ++g)
    for (int oc = 0; oc < cog; ++oc) {
      const int co = g * cog + oc;
      const real* gout_ch = gout + co * out_plane;
      for (int ic = 0; ic < cig; ++ic) {
        const int ci = g * cig + ic;
        const real* in_ch = in + ci * in_plane;
        real* gwrow = gw + ((static_cast<long>(co) * cig + ic) * kh) * kw;
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx) {
            const int off_y = ky * s.dilation_h - s.pad_h;
            const int off_x = kx * s.dilation_w - s.pad_w;
            int x0 = off_x < 0 ? (-off_x + s.stride_w - 1) / s.stride_w : 0;
            int x1 = std::min((d.in_w - 1 - off_x) / s.stride_w + 1, d.out_w);
            if (x0 >= x1) continue;
            real acc = 0;
            for (int oy = 0; oy < d.out_h; ++oy) {
              const int iy = oy * s.stride_h + off_y;
              if (iy < 0 || iy >= d.in_h) continue;
              const real* irow = in_ch + static_cast<long>(iy) * d.in_w;
              const real* grow = gout_ch + static_cast<long>(oy) * d.out_w;
              if (s.stride_w == 1) {
                for (int ox = x0; ox < x1; ++ox) acc += irow[ox + off_x] * grow[ox];
              } else {
                for (int ox = x0; ox < x1; ++ox)
                  acc += irow[static_cast<long>(ox) * s.stride_w + off_x] * grow[ox];
              }
            }
            gwrow[ky * kw + kx] += acc;
          }
      }
    }
}

}  // namespace detail

/// 2-D convolution over [C,H,W] or [N,C,H,W]; see ConvSpec for conventions.
inline Tensor conv2d(const Tensor& input, const ConvSpec& spec) {
  spec.validate();
  if (input.rank() != 3 && input.rank() != 4)
    throw std::invalid_argument("conv2d expects [C,H,W] or [N,C,H,W]");
  const bool batched = input.rank() == 4;
  const int n = batched ? input.extent(0) : 1;
  const auto d = detail::conv_output_dims(input.shape(), spec);
  Shape oshape = batched ? Shape{n, d.out_c, d.out_h, d.out_w}
                         : Shape{d.out_c, d.out_h, d.out_w};
  Tensor out = Tensor::zeros(oshape);
  const long in_sz = static_cast<long>(d.in_c) * d.in_h * d.in_w;
  const long out_sz = static_cast<long>(d.out_c) * d.out_h * d.out_w;
  for (int b = 0; b < n; ++b)
    detail::conv_forward_one(input.data() + b * in_sz, out.data() + b * out_sz,
                             spec, d);
  if (spec.bias.defined()) {
    const long plane = static_cast<long>(d.out_h) * d.out_w;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < d.out_c; ++c) {
        const real bv = spec.bias.data()[c];
        real* p = out.data() + b * out_sz + c * plane;
        for (long i = 0; i < plane; ++i) p[i] += bv;
      }
  }
  debug_check_finite(out, "conv2d");
  const bool need = input.requires_grad() || spec.weight.requires_grad() ||
                    (spec.bias.defined() && spec.bias.requires_grad());
  if (Tape* t = Tape::active(); t && need) {
    out.set_requires_grad(true);
    Tensor ic = input, oc = out;
    ConvSpec sc = spec;
    t->record(oc, [ic, oc, sc, d, n, in_sz, out_sz]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      if (ic.requires_grad()) {
        real* gin = ic.grad().data();
        for (int b = 0; b < n; ++b)
          detail::conv_backward_input_one(g + b * out_sz, gin + b * in_sz, sc, d);
      }
      if (sc.weight.requires_grad()) {
        real* gw = sc.weight.grad().data();
        for (int b = 0; b < n; ++b)
          detail::conv_backward_weight_one(ic.data() + b * in_sz, g + b * out_sz,
                                           gw, sc, d);
      }
      if (sc.bias.defined() && sc.bias.requires_grad()) {
        real* gb = sc.bias.grad().data();
        const long plane = static_cast<long>(d.out_h) * d.out_w;
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < d.out_c; ++c) {
            const real* p = g + b * out_sz + c * plane;
            real s = 0;
            for (long i = 0; i < plane; ++i) s += p[i];
            gb[c] += s;
          }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------

/// out[c, r*i+di, r*j+dj] = in[c*r*r + di*r + dj, i, j]
inline Tensor pixel_shuffle(const Tensor& input, int r) {
  if (input.rank() != 3) throw std::invalid_argument("pixel_shuffle expects [C,H,W]");
  if (r < 1 || input.extent(0) % (r * r) != 0)
    throw std::invalid_argument("pixel_shuffle: channels not divisible by r^2");
  const int c = input.extent(0) / (r * r), h = input.extent(1), w = input.extent(2);
  Tensor out = Tensor::zeros({c, h * r, w * r});
  const real* pi = input.data();
  real* po = out.data();
  for (int cc = 0; cc < c; ++cc)
    for (int di = 0; di < r; ++di)
      for (int dj = 0; dj < r; ++dj) {
        const real* src = pi + (static_cast<long>(cc) * r * r + di * r + dj) * h * w;
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j)
            po[(static_cast<long>(cc) * h * r + (i * r + di)) * (w * r) +
               (j * r + dj)] = src[static_cast<long>(i) * w + j];
      }
  if (Tape* t = Tape::active(); t && input.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ic = input, oc = out;
    t->record(oc, [ic, oc, c, h, w, r]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      real* gi = ic.grad().data();
      for (int cc = 0; cc < c; ++cc)
        for (int di = 0; di < r; ++di)
          for (int dj = 0; dj < r; ++dj) {
            real* dst = gi + (static_cast<long>(cc) * r * r + di * r + dj) * h * w;
            for (int i = 0; i < h; ++i)
              for (int j = 0; j < w; ++j)
                dst[static_cast<long>(i) * w + j] +=
                    g[(static_cast<long>(cc) * h * r + (i * r + di)) * (w * r) +
                      (j * r + dj)];
          }
    });
  }
  return out;
}

/// Exact inverse of pixel_shuffle (test and oracle helper).
inline Tensor pixel_unshuffle(const Tensor& input, int r) {
  if (input.rank() != 3) throw std::invalid_argument("pixel_unshuffle expects [C,H,W]");
  if (input.extent(1) % r != 0 || input.extent(2) % r != 0)
    throw std::invalid_argument("pixel_unshuffle: extents not divisible by r");
  const int c = input.extent(0), h = input.extent(1) / r, w = input.extent(2) / r;
  Tensor out = Tensor::zeros({c * r * r, h, w});
  const real* pi = input.data();
  real* po = out.data();
  for (int cc = 0; cc < c; ++cc)
    for (int di = 0; di < r; ++di)
      for (int dj = 0; dj < r; ++dj) {
        real* dst = po + (static_cast<long>(cc) * r * r + di * r + dj) * h * w;
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j)
            dst[static_cast<long>(i) * w + j] =
                pi[(static_cast<long>(cc) * h * r + (i * r + di)) * (w * r) +
                   (j * r + dj)];
      }
  return out;
}

// ---------------------------------------------------------------------------

/// Continuous source-pixel coordinates, x plane then y plane: [2, H_out, W_out].
struct SampleGrid {
  Tensor coords;
  int out_h() const { return coords.extent(1); }
  int out_w() const { return coords.extent(2); }
  void validate() const {
    if (!coords.defined() || coords.rank() != 3 || coords.extent(0) != 2)
      throw std::invalid_argument("SampleGrid: coords must be [2,H,W]");
  }
};

/// Bilinear sampling at continuous coordinates; out-of-range coordinates are
/// clamped to the image border before interpolation. Differentiable w.r.t.
/// both the input values and the grid coordinates.
inline Tensor grid_sample(const Tensor& input, const SampleGrid& grid) {
  grid.validate();
  if (input.rank() != 3) throw std::invalid_argument("grid_sample expects [C,H,W]");
  const int c = input.extent(0), h = input.extent(1), w = input.extent(2);
  const int oh = grid.out_h(), ow = grid.out_w();
  const long opix = static_cast<long>(oh) * ow;
  const real* gx = grid.coords.data();
  const real* gy = gx + opix;
  Tensor out = Tensor::zeros({c, oh, ow});
  const real* pi = input.data();
  real* po = out.data();
  const long plane = static_cast<long>(h) * w;
  for (long p = 0; p < opix; ++p) {
    real x = std::min<real>(w - 1.0, std::max<real>(0.0, gx[p]));
    real y = std::min<real>(h - 1.0, std::max<real>(0.0, gy[p]));
    int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    if (x0 > w - 2) x0 = w >= 2 ? w - 2 : 0;
    if (y0 > h - 2) y0 = h >= 2 ? h - 2 : 0;
    const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const real fx = x - x0, fy = y - y0;
    const real w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy);
    const real w10 = (1 - fx) * fy, w11 = fx * fy;
    for (int cc = 0; cc < c; ++cc) {
      const real* ch = pi + cc * plane;
      po[cc * opix + p] = w00 * ch[static_cast<long>(y0) * w + x0] +
                          w01 * ch[static_cast<long>(y0) * w + x1] +
                          w10 * ch[static_cast<long>(y1) * w + x0] +
                          w11 * ch[static_cast<long>(y1) * w + x1];
    }
  }
  debug_check_finite(out, "grid_sample");
  const bool need = input.requires_grad() || grid.coords.requires_grad();
  if (Tape* t = Tape::active(); t && need) {
    out.set_requires_grad(true);
    Tensor ic = input, gc = grid.coords, oc = out;
    t->record(oc, [ic, gc, oc, c, h, w, oh, ow, opix, plane]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      const real* gx = gc.data();
      const real* gy = gx + opix;
      const real* pi = ic.data();
      real* gin = ic.requires_grad() ? ic.grad().data() : nullptr;
      real* ggrid = gc.requires_grad() ? gc.grad().data() : nullptr;
      for (long p = 0; p < opix; ++p) {
        const bool cx = gx[p] < 0.0 || gx[p] > w - 1.0;
        const bool cy = gy[p] < 0.0 || gy[p] > h - 1.0;
        real x = std::min<real>(w - 1.0, std::max<real>(0.0, gx[p]));
        real y = std::min<real>(h - 1.0, std::max<real>(0.0, gy[p]));
        int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
        if (x0 > w - 2) x0 = w >= 2 ? w - 2 : 0;
        if (y0 > h - 2) y0 = h >= 2 ? h - 2 : 0;
        const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
        const real fx = x - x0, fy = y - y0;
        real dx = 0, dy = 0;
        for (int cc = 0; cc < c; ++cc) {
          const real go = g[cc * opix + p];
          if (go == 0.0) continue;
          const real* ch = pi + cc * plane;
          const real v00 = ch[static_cast<long>(y0) * w + x0];
          const real v01 = ch[static_cast<long>(y0) * w + x1];
          const real v10 = ch[static_cast<long>(y1) * w + x0];
          const real v11 = ch[static_cast<long>(y1) * w + x1];
          if (gin) {
            real* gch = gin + cc * plane;
            gch[static_cast<long>(y0) * w + x0] += go * (1 - fx) * (1 - fy);
            gch[static_cast<long>(y0) * w + x1] += go * fx * (1 - fy);
            gch[static_cast<long>(y1) * w + x0] += go * (1 - fx) * fy;
            gch[static_cast<long>(y1) * w + x1] += go * fx * fy;
          }
          dx += go * ((1 - fy) * (v01 - v00) + fy * (v11 - v10));
          dy += go * ((1 - fx) * (v10 - v00) + fx * (v11 - v01));
        }
        if (ggrid) {
          if (!cx) ggrid[p] += dx;
          if (!cy) ggrid[opix + p] += dy;
        }
      }
    });
  }
  return out;
}

/// Half-pixel identity grid: coords for a scale*h x scale*w output sampling
/// an h x w source, x = (j+0.5)/scale - 0.5, y = (i+0.5)/scale - 0.5.
inline SampleGrid make_identity_grid(int h, int w, int scale) {
  if (h < 1 || w < 1 || scale < 1)
    throw std::invalid_argument("make_identity_grid: bad extents");
  const int oh = h * scale, ow = w * scale;
  Tensor coords = Tensor::zeros({2, oh, ow});
  real* px = coords.data();
  real* py = px + static_cast<long>(oh) * ow;
  const real inv = 1.0 / scale;
  for (int i = 0; i < oh; ++i)
    for (int j = 0; j < ow; ++j) {
      px[static_cast<long>(i) * ow + j] = (j + 0.5) * inv - 0.5;
      py[static_cast<long>(i) * ow + j] = (i + 0.5) * inv - 0.5;
    }
  return SampleGrid{coords};
}

/// Half-pixel downsampling grid onto an h x w source, producing
/// (h/factor) x (w/factor) output coordinates.
inline SampleGrid make_downsample_grid(int h, int w, int factor) {
  const int oh = h / factor, ow = w / factor;
  Tensor coords = Tensor::zeros({2, oh, ow});
  real* px = coords.data();
  real* py = px + static_cast<long>(oh) * ow;
  for (int i = 0; i < oh; ++i)
    for (int j = 0; j < ow; ++j) {
      px[static_cast<long>(i) * ow + j] = (j + 0.5) * factor - 0.5;
      py[static_cast<long>(i) * ow + j] = (i + 0.5) * factor - 0.5;
    }
  return SampleGrid{coords};
}

/// Bilinear upscale by an integer factor, half-pixel convention. Defined as
/// grid_sample with the identity grid, so a zero-offset learned upsampler
/// reproduces it bit-for-bit.
inline Tensor bilinear_resize(const Tensor& input, int scale) {
  if (input.rank() != 3) throw std::invalid_argument("bilinear_resize expects [C,H,W]");
  if (scale < 1) throw std::invalid_argument("bilinear_resize: scale must be >= 1");
  return grid_sample(input, make_identity_grid(input.extent(1), input.extent(2), scale));
}

// ---------------------------------------------------------------------------

enum class Activation { sigmoid, elu };

inline Tensor sigmoid(const Tensor& x) {
  return map_unary(x, [](real v) { return 1.0 / (1.0 + std::exp(-v)); },
                   [](real, real y) { return y * (1.0 - y); }, "sigmoid");
}

inline Tensor elu(const Tensor& x) {
  return map_unary(x, [](real v) { return v >= 0 ? v : std::expm1(v); },
                   [](real v, real y) { return v >= 0 ? 1.0 : y + 1.0; },
                   "elu");
}

inline Tensor activation(const Tensor& x, Activation kind) {
  return kind == Activation::sigmoid ? sigmoid(x) : elu(x);
}

/// Channel concatenation of [Ca,H,W] and [Cb,H,W].
inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.extent(1) != b.extent(1) ||
      a.extent(2) != b.extent(2))
    throw std::invalid_argument("concat_channels: spatial mismatch");
  return concat_axis0(a, b);
}

// ---------------------------------------------------------------------------
// Small spatial helpers used by the losses.

/// Horizontal forward difference: out[c,i,j] = x[c,i,j+1] - x[c,i,j].
inline Tensor diff_x(const Tensor& x) {
  if (x.rank() != 3 || x.extent(2) < 2)
    throw std::invalid_argument("diff_x expects [C,H,W>=2]");
  const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
  Tensor out = Tensor::zeros({c, h, w - 1});
  const real* p = x.data();
  real* po = out.data();
  for (int cc = 0; cc < c; ++cc)
    for (int i = 0; i < h; ++i) {
      const real* row = p + (static_cast<long>(cc) * h + i) * w;
      real* orow = po + (static_cast<long>(cc) * h + i) * (w - 1);
      for (int j = 0; j < w - 1; ++j) orow[j] = row[j + 1] - row[j];
    }
  if (Tape* t = Tape::active(); t && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    t->record(oc, [xc, oc, c, h, w]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      real* gx = xc.grad().data();
      for (int cc = 0; cc < c; ++cc)
        for (int i = 0; i < h; ++i) {
          const real* grow = g + (static_cast<long>(cc) * h + i) * (w - 1);
          real* xrow = gx + (static_cast<long>(cc) * h + i) * w;
          for (int j = 0; j < w - 1; ++j) {
            xrow[j + 1] += grow[j];
            xrow[j] -= grow[j];
          }
        }
    });
  }
  return out;
}

/// Vertical forward difference: out[c,i,j] = x[c,i+1,j] - x[c,i,j].
inline Tensor diff_y(const Tensor& x) {
  if (x.rank() != 3 || x.extent(1) < 2)
    throw std::invalid_argument("diff_y expects [C,H>=2,W]");
  const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
  Tensor out = Tensor::zeros({c, h - 1, w});
  const real* p = x.data();
  real* po = out.data();
  for (int cc = 0; cc < c; ++cc)
    for (int i = 0; i < h - 1; ++i)
      for (int j = 0; j < w; ++j)
        po[(static_cast<long>(cc) * (h - 1) + i) * w + j] =
            p[(static_cast<long>(cc) * h + i + 1) * w + j] -
            p[(static_cast<long>(cc) * h + i) * w + j];
  if (Tape* t = Tape::active(); t && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    t->record(oc, [xc, oc, c, h, w]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      real* gx = xc.grad().data();
      for (int cc = 0; cc < c; ++cc)
        for (int i = 0; i < h - 1; ++i)
          for (int j = 0; j < w; ++j) {
            const real gv = g[(static_cast<long>(cc) * (h - 1) + i) * w + j];
            gx[(static_cast<long>(cc) * h + i + 1) * w + j] += gv;
            gx[(static_cast<long>(cc) * h + i) * w + j] -= gv;
          }
    });
  }
  return out;
}

/// 3x3 box mean with replicate padding (SSIM local statistics window).
inline Tensor box_mean3(const Tensor& x) {
  if (x.rank() != 3) throw std::invalid_argument("box_mean3 expects [C,H,W]");
  const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
  Tensor out = Tensor::zeros({c, h, w});
  const real* p = x.data();
  real* po = out.data();
  const long plane = static_cast<long>(h) * w;
  auto cl = [](int v, int lim) { return v < 0 ? 0 : (v >= lim ? lim - 1 : v); };
  for (int cc = 0; cc < c; ++cc)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        real s = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            s += p[cc * plane + static_cast<long>(cl(i + dy, h)) * w + cl(j + dx, w)];
        po[cc * plane + static_cast<long>(i) * w + j] = s / 9.0;
      }
  if (Tape* t = Tape::active(); t && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    t->record(oc, [xc, oc, c, h, w, plane, cl]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      real* gx = xc.grad().data();
      for (int cc = 0; cc < c; ++cc)
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) {
            const real gv = g[cc * plane + static_cast<long>(i) * w + j] / 9.0;
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx)
                gx[cc * plane + static_cast<long>(cl(i + dy, h)) * w +
                   cl(j + dx, w)] += gv;
          }
    });
  }
  return out;
}

/// 2x2 average pooling (image pyramid helper, not differentiated in practice
/// but the backward is provided for completeness).
inline Tensor avg_pool2(const Tensor& x) {
  if (x.rank() != 3 || x.extent(1) % 2 || x.extent(2) % 2)
    throw std::invalid_argument("avg_pool2 expects even [C,H,W]");
  const int c = x.extent(0), h = x.extent(1) / 2, w = x.extent(2) / 2;
  Tensor out = Tensor::zeros({c, h, w});
  const real* p = x.data();
  real* po = out.data();
  for (int cc = 0; cc < c; ++cc)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const long base = (static_cast<long>(cc) * 2 * h + 2 * i) * 2 * w + 2 * j;
        po[(static_cast<long>(cc) * h + i) * w + j] =
            0.25 * (p[base] + p[base + 1] + p[base + 2 * w] + p[base + 2 * w + 1]);
      }
  if (Tape* t = Tape::active(); t && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    t->record(oc, [xc, oc, c, h, w]() mutable {
      if (!oc.has_grad()) return;
      const real* g = oc.grad().data();
      real* gx = xc.grad().data();
      for (int cc = 0; cc < c; ++cc)
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j) {
            const real gv = 0.25 * g[(static_cast<long>(cc) * h + i) * w + j];
            const long base =
                (static_cast<long>(cc) * 2 * h + 2 * i) * 2 * w + 2 * j;
            gx[base] += gv;
            gx[base + 1] += gv;
            gx[base + 2 * w] += gv;
            gx[base + 2 * w + 1] += gv;
          }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Analytic parameter / multiply-accumulate tallies for reporting.

inline long conv_param_count(const ConvSpec& s) {
  return s.weight.numel() + (s.bias.defined() ? s.bias.numel() : 0);
}

inline long conv_macs(const ConvSpec& s, int h, int w) {
  const auto d = detail::conv_output_dims({s.in_channels(), h, w}, s);
  return static_cast<long>(d.out_c) * (s.in_channels() / s.groups) *
         s.kernel_h() * s.kernel_w() * d.out_h * d.out_w;
}

}  // namespace lkad
