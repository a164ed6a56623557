#pragma once

#include "lkad/gradcheck.hpp"
#include "lkad/losses.hpp"
#include "lkad/synthetic.hpp"
#include "lkad/trainer.hpp"

namespace lkad {

struct CheckResult {
  std::string name;
  real err = 0;
  real tol = 0;
  bool pass() const { return err <= tol; }
};

namespace checks {

inline Tensor randn(NormalSampler& rng, Shape shape, real sd = 1.0) {
  Tensor t = Tensor::zeros(shape);
  for (long i = 0; i < t.numel(); ++i) t.data()[i] = rng.next(sd);
  return t;
}

/// Fixed random linear functional; turns any output into a scalar loss.
inline Tensor probe_sum(const Tensor& out, uint64_t seed) {
  NormalSampler rng(seed);
  Tensor w = Tensor::zeros(out.shape());
  for (long i = 0; i < w.numel(); ++i) w.data()[i] = rng.next();
  return sum(out * w);
}

inline ConvSpec spec_from(const Tensor& weight, const Tensor& bias, int stride,
                          int pad, int dilation, int groups) {
  ConvSpec s;
  s.weight = weight;
  s.bias = bias;
  s.stride_h = s.stride_w = stride;
  s.pad_h = s.pad_w = pad;
  s.dilation_h = s.dilation_w = dilation;
  s.groups = groups;
  return s;
}

/// Six-loop reference convolution. Accumulation order (ic, ky, kx) matches
/// the production kernel so results are bit-identical, bias added last.
inline Tensor naive_conv(const Tensor& x, const ConvSpec& s) {
  const auto d = detail::conv_output_dims(x.shape(), s);
  Tensor out = Tensor::zeros({d.out_c, d.out_h, d.out_w});
  const int cig = d.in_c / s.groups, cog = d.out_c / s.groups;
  for (int g = 0; g < s.groups; ++g)
    for (int oc = 0; oc < cog; ++oc)
      for (int oy = 0; oy < d.out_h; ++oy)
        for (int ox = 0; ox < d.out_w; ++ox) {
          const int co = g * cog + oc;
          real acc = 0;
          for (int ic = 0; ic < cig; ++ic)
            for (int ky = 0; ky < s.kernel_h(); ++ky)
              for (int kx = 0; kx < s.kernel_w(); ++kx) {
                const int iy = oy * s.stride_h + ky * s.dilation_h - s.pad_h;
                const int ix = ox * s.stride_w + kx * s.dilation_w - s.pad_w;
                if (iy < 0 || iy >= d.in_h || ix < 0 || ix >= d.in_w) continue;
                acc += s.weight.at({co, ic, ky, kx}) *
                       x.at({g * cig + ic, iy, ix});
              }
          if (s.bias.defined()) acc += s.bias.data()[co];
          out.at({co, oy, ox}) = acc;
        }
  return out;
}

/// Randomized (kernel, stride, dilation, groups) matrix vs the reference;
/// returns the worst absolute difference (expected: exactly zero).
inline real conv_oracle_worst() {
  NormalSampler rng(606);
  real worst = 0;
  const int kernels[] = {1, 3, 5, 7};
  for (int k : kernels)
    for (int stride : {1, 2})
      for (int dilation : {1, 2, 3}) {
        for (int mode = 0; mode < 3; ++mode) {
          // mode 0: dense, 1: depthwise, 2: grouped
          const int cin = mode == 2 ? 4 : 3;
          const int groups = mode == 0 ? 1 : (mode == 1 ? cin : 2);
          const int cout = mode == 1 ? cin : 6;
          const int eff = dilation * (k - 1) + 1;
          const int h = eff + 3 + static_cast<int>(rng.raw() % 4);
          const int w = eff + 3 + static_cast<int>(rng.raw() % 4);
          ConvSpec s;
          s.weight = randn(rng, {cout, cin / groups, k, k});
          if (rng.raw() % 2) s.bias = randn(rng, {cout});
          s.stride_h = s.stride_w = stride;
          s.dilation_h = s.dilation_w = dilation;
          s.pad_h = s.pad_w = static_cast<int>(rng.raw() % (eff / 2 + 1));
          s.groups = groups;
          Tensor x = randn(rng, {cin, h, w});
          Tensor a = conv2d(x, s);
          Tensor b = naive_conv(x, s);
          for (long i = 0; i < a.numel(); ++i)
            worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
        }
      }
  return worst;
}

/// Scalar-loop reference for the evaluation metrics.
inline MetricsReport naive_metrics(const Tensor& pred, const Tensor& gt,
                                   bool median_scaling, real cap_min,
                                   real cap_max) {
  std::vector<real> p, g;
  for (long i = 0; i < gt.numel(); ++i) {
    if (gt.data()[i] < cap_min || gt.data()[i] > cap_max) continue;
    p.push_back(pred.data()[i]);
    g.push_back(gt.data()[i]);
  }
  if (median_scaling) {
    auto med = [](std::vector<real> v) {
      std::sort(v.begin(), v.end());
      return v.size() % 2 ? v[v.size() / 2]
                          : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    };
    const real s = med(g) / med(p);
    for (real& v : p) v *= s;
  }
  MetricsReport r;
  r.n_pixels = static_cast<long>(p.size());
  r.scaled = median_scaling;
  r.cap_min = cap_min;
  r.cap_max = cap_max;
  real sa = 0, ss = 0, sq = 0, sl = 0, c1 = 0, c2 = 0, c3 = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    real pv = p[i];
    if (pv < cap_min) pv = cap_min;
    if (pv > cap_max) pv = cap_max;
    sa += std::abs(pv - g[i]) / g[i];
    ss += (pv - g[i]) * (pv - g[i]) / g[i];
    sq += (pv - g[i]) * (pv - g[i]);
    sl += std::pow(std::log(pv) - std::log(g[i]), 2);
    const real ratio = std::max(pv / g[i], g[i] / pv);
    if (ratio < 1.25) c1 += 1;
    if (ratio < 1.25 * 1.25) c2 += 1;
    if (ratio < 1.25 * 1.25 * 1.25) c3 += 1;
  }
  const real n = static_cast<real>(p.size());
  r.abs_rel = sa / n;
  r.sq_rel = ss / n;
  r.rmse = std::sqrt(sq / n);
  r.rmse_log = std::sqrt(sl / n);
  r.d1 = c1 / n;
  r.d2 = c2 / n;
  r.d3 = c3 / n;
  return r;
}

inline std::vector<CheckResult> suite_ops() {
  std::vector<CheckResult> out;
  NormalSampler rng(101);
  const real tol = 1e-4;
  auto conv_case = [&](const std::string& name, Shape in, Shape w, int stride,
                       int pad, int dilation, int groups) {
    std::vector<Tensor> inputs = {randn(rng, in), randn(rng, w, 0.5),
                                  randn(rng, {w[0]}, 0.5)};
    auto f = [=](const std::vector<Tensor>& v) {
      return probe_sum(
          conv2d(v[0], spec_from(v[1], v[2], stride, pad, dilation, groups)), 7);
    };
    out.push_back({name, grad_check(f, inputs), tol});
  };
  conv_case("conv2d 3x3", {3, 6, 7}, {4, 3, 3, 3}, 1, 1, 1, 1);
  conv_case("conv2d 3x3 stride2", {3, 8, 9}, {4, 3, 3, 3}, 2, 1, 1, 1);
  conv_case("conv2d 3x3 dilated2", {2, 9, 9}, {3, 2, 3, 3}, 1, 2, 2, 1);
  conv_case("conv2d depthwise 5x5", {3, 9, 8}, {3, 1, 5, 5}, 1, 2, 1, 3);
  conv_case("conv2d depthwise 3x3 dilated3", {2, 10, 10}, {2, 1, 3, 3}, 1, 3, 3, 2);
  conv_case("conv2d grouped", {4, 6, 6}, {6, 2, 3, 3}, 1, 1, 1, 2);
  conv_case("conv2d 1x1", {5, 4, 5}, {3, 5, 1, 1}, 1, 0, 1, 1);
  {
    std::vector<Tensor> inputs = {randn(rng, {8, 3, 4})};
    auto f = [](const std::vector<Tensor>& v) {
      return probe_sum(pixel_shuffle(v[0], 2), 8);
    };
    out.push_back({"pixel_shuffle r2", grad_check(f, inputs), tol});
  }
  {
    // Grid coordinates kept strictly interior: the border clamp is the one
    // genuinely non-differentiable point of the sampler.
    Tensor img = randn(rng, {2, 5, 6});
    Tensor coords = Tensor::zeros({2, 4, 4});
    for (long i = 0; i < 16; ++i) {
      coords.data()[i] = 0.3 + 4.3 * rng.uniform();       // x in (0.3, 4.6)
      coords.data()[16 + i] = 0.3 + 3.3 * rng.uniform();  // y in (0.3, 3.6)
    }
    auto f = [](const std::vector<Tensor>& v) {
      return probe_sum(grid_sample(v[0], SampleGrid{v[1]}), 9);
    };
    out.push_back({"grid_sample", grad_check(f, {img, coords}), tol});
  }
  {
    std::vector<Tensor> inputs = {randn(rng, {3, 4, 5})};
    auto f = [](const std::vector<Tensor>& v) {
      return probe_sum(bilinear_resize(v[0], 2), 10);
    };
    out.push_back({"bilinear_resize x2", grad_check(f, inputs), tol});
  }
  auto unary_case = [&](const std::string& name, auto op) {
    std::vector<Tensor> inputs = {randn(rng, {3, 4, 5})};
    auto f = [op](const std::vector<Tensor>& v) { return probe_sum(op(v[0]), 11); };
    out.push_back({name, grad_check(f, inputs), tol});
  };
  unary_case("sigmoid", [](const Tensor& x) { return sigmoid(x); });
  unary_case("elu", [](const Tensor& x) { return elu(x); });
  unary_case("diff_x", [](const Tensor& x) { return diff_x(x); });
  unary_case("diff_y", [](const Tensor& x) { return diff_y(x); });
  unary_case("box_mean3", [](const Tensor& x) { return box_mean3(x); });
  {
    // avg_pool2 needs even spatial extents.
    std::vector<Tensor> inputs = {randn(rng, {3, 4, 6})};
    auto f = [](const std::vector<Tensor>& v) {
      return probe_sum(avg_pool2(v[0]), 11);
    };
    out.push_back({"avg_pool2", grad_check(f, inputs), tol});
  }
  {
    std::vector<Tensor> inputs = {randn(rng, {2, 4, 5}), randn(rng, {3, 4, 5})};
    auto f = [](const std::vector<Tensor>& v) {
      return probe_sum(concat_channels(v[0], v[1]), 12);
    };
    out.push_back({"concat_channels", grad_check(f, inputs), tol});
  }
  return out;
}

/// Widest nonzero extent of d(attention path)/d(input) around a center
/// pixel; equals the composed-operator support for generic weights.
inline int measured_lka_support(const LkaParams& params) {
  const int k = params.effective_extent();
  const int n = 2 * k + 5;
  Tensor x = Tensor::zeros({params.channels(), n, n});
  NormalSampler rng(33);
  for (long i = 0; i < x.numel(); ++i) x.data()[i] = rng.next();
  x.set_requires_grad(true);
  const int c0 = 0, cy = n / 2, cx = n / 2;
  Tape tape;
  Tensor att = conv2d(conv2d(conv2d(x, params.dw), params.dwd), params.pw);
  Tensor w = Tensor::zeros(att.shape());
  w.data()[(static_cast<long>(c0) * n + cy) * n + cx] = 1.0;
  tape.backward(sum(att * w));
  int reach = 0;
  const real* g = x.grad().data();
  for (int c = 0; c < params.channels(); ++c)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (g[(static_cast<long>(c) * n + i) * n + j] != 0.0)
          reach = std::max({reach, std::abs(i - cy), std::abs(j - cx)});
  return 2 * reach + 1;
}

inline std::vector<CheckResult> suite_lka() {
  std::vector<CheckResult> out;
  NormalSampler rng(202);
  {
    LkaParams p = make_lka_params(nullptr, "lka", rng, 3, 5, 7, 3);
    for (Tensor* t : {&p.dw.bias, &p.dwd.bias, &p.pw.bias})
      for (long i = 0; i < t->numel(); ++i) t->data()[i] = rng.next(0.1);
    Tensor x = randn(rng, {3, 9, 10});
    std::vector<Tensor> inputs = {x,       p.dw.weight,  p.dw.bias,
                                  p.dwd.weight, p.dwd.bias, p.pw.weight,
                                  p.pw.bias};
    auto f = [p](const std::vector<Tensor>& v) mutable {
      p.dw.weight = v[1];
      p.dw.bias = v[2];
      p.dwd.weight = v[3];
      p.dwd.bias = v[4];
      p.pw.weight = v[5];
      p.pw.bias = v[6];
      return probe_sum(lka_forward(v[0], p), 13);
    };
    out.push_back({"lka_forward gradients", grad_check(f, inputs), 1e-4});
  }
  {
    // Composed-kernel oracle: the attention path is linear when bias-free,
    // so it must equal a single dense conv with the effective kernel.
    real worst = 0;
    NormalSampler orng(404);
    for (int trial = 0; trial < 20; ++trial) {
      const int c = 1 + static_cast<int>(orng.raw() % 4);
      const int h = 10 + static_cast<int>(orng.raw() % 15);
      const int w = 10 + static_cast<int>(orng.raw() % 15);
      LkaParams p = make_lka_params(nullptr, "o", orng, c, 5, 7, 3, false);
      Tensor x = randn(orng, {c, h, w});
      // Zero a border band as wide as the first stage's padding: the staged
      // form truncates its intermediate to h x w, which only matches a
      // single conv with the composed kernel when that band carries nothing.
      const int band = (5 - 1) / 2;
      for (int cc = 0; cc < c; ++cc)
        for (int i = 0; i < h; ++i)
          for (int j = 0; j < w; ++j)
            if (i < band || i >= h - band || j < band || j >= w - band)
              x.data()[(static_cast<long>(cc) * h + i) * w + j] = 0.0;
      Tensor att = conv2d(conv2d(conv2d(x, p.dw), p.dwd), p.pw);
      ConvSpec eff;
      eff.weight = lka_effective_kernel(p);
      eff.pad_h = eff.pad_w = (p.effective_extent() - 1) / 2;
      Tensor ref = conv2d(x, eff);
      for (long i = 0; i < att.numel(); ++i)
        worst = std::max(worst, std::abs(att.data()[i] - ref.data()[i]));
    }
    out.push_back({"lka composed-kernel oracle", worst, 1e-10});
  }
  {
    LkaParams p = make_lka_params(nullptr, "s1", rng, 2, 3, 7, 3, false);
    out.push_back({"lka support 3/7/3 == 21",
                   std::abs(measured_lka_support(p) - 21.0), 0.0});
  }
  {
    LkaParams p = make_lka_params(nullptr, "s2", rng, 2, 5, 7, 3, false);
    out.push_back({"lka support 5/7/3 == 23",
                   std::abs(measured_lka_support(p) - 23.0), 0.0});
  }
  return out;
}

/// Scalar-loop reference for the offset upsampler.
inline Tensor naive_offset_upsample(const Tensor& x, const UpsamplerParams& p) {
  const int c = x.extent(0), h = x.extent(1), w = x.extent(2);
  const int r = p.r, oh = h * r, ow = w * r;
  const real* wt = p.offset_proj.weight.data();
  const real* bs = p.offset_proj.bias.data();
  Tensor out = Tensor::zeros({c, oh, ow});
  for (int i = 0; i < oh; ++i)
    for (int j = 0; j < ow; ++j) {
      const int si = i / r, sj = j / r, di = i % r, dj = j % r;
      real off[2];
      for (int axis = 0; axis < 2; ++axis) {
        const int oc = axis * r * r + di * r + dj;
        real v = bs[oc];
        for (int ic = 0; ic < c; ++ic)
          v += wt[static_cast<long>(oc) * c + ic] *
               x.data()[(static_cast<long>(ic) * h + si) * w + sj];
        off[axis] = 0.25 * v;
      }
      real sx = off[0] + (j + 0.5) / r - 0.5;
      real sy = off[1] + (i + 0.5) / r - 0.5;
      sx = std::min<real>(w - 1.0, std::max<real>(0.0, sx));
      sy = std::min<real>(h - 1.0, std::max<real>(0.0, sy));
      int x0 = std::min(static_cast<int>(sx), w - 2 < 0 ? 0 : w - 2);
      int y0 = std::min(static_cast<int>(sy), h - 2 < 0 ? 0 : h - 2);
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const real fx = sx - x0, fy = sy - y0;
      for (int cc = 0; cc < c; ++cc) {
        auto at = [&](int yy, int xx) {
          return x.data()[(static_cast<long>(cc) * h + yy) * w + xx];
        };
        out.data()[(static_cast<long>(cc) * oh + i) * ow + j] =
            (1 - fx) * (1 - fy) * at(y0, x0) + fx * (1 - fy) * at(y0, x1) +
            (1 - fx) * fy * at(y1, x0) + fx * fy * at(y1, x1);
      }
    }
  return out;
}

inline std::vector<CheckResult> suite_upsampler() {
  std::vector<CheckResult> out;
  NormalSampler rng(303);
  {
    // Zero-initialized parameters must reproduce plain bilinear exactly.
    real worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const int c = 1 + static_cast<int>(rng.raw() % 4);
      const int h = 3 + static_cast<int>(rng.raw() % 8);
      const int w = 3 + static_cast<int>(rng.raw() % 8);
      UpsamplerParams p = make_upsampler_params(nullptr, "u", c);
      Tensor x = randn(rng, {c, h, w});
      Tensor a = offset_upsample(x, p);
      Tensor b = bilinear_resize(x, 2);
      for (long i = 0; i < a.numel(); ++i)
        if (a.data()[i] != b.data()[i]) worst = std::max(worst, real(1));
    }
    out.push_back({"upsampler zero-init == bilinear (bitwise)", worst, 0.0});
  }
  {
    real worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const int c = 1 + static_cast<int>(rng.raw() % 4);
      const int h = 3 + static_cast<int>(rng.raw() % 8);
      const int w = 3 + static_cast<int>(rng.raw() % 8);
      UpsamplerParams p = make_upsampler_params(nullptr, "u", c);
      for (long i = 0; i < p.offset_proj.weight.numel(); ++i)
        p.offset_proj.weight.data()[i] = rng.next(0.3);
      for (long i = 0; i < p.offset_proj.bias.numel(); ++i)
        p.offset_proj.bias.data()[i] = rng.next(0.1);
      Tensor x = randn(rng, {c, h, w});
      Tensor a = offset_upsample(x, p);
      Tensor b = naive_offset_upsample(x, p);
      for (long i = 0; i < a.numel(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    out.push_back({"upsampler naive resampling oracle", worst, 1e-10});
  }
  {
    UpsamplerParams p = make_upsampler_params(nullptr, "u", 3);
    for (long i = 0; i < p.offset_proj.weight.numel(); ++i)
      p.offset_proj.weight.data()[i] = rng.next(0.05);
    Tensor x = randn(rng, {3, 5, 6});
    std::vector<Tensor> inputs = {x, p.offset_proj.weight, p.offset_proj.bias};
    auto f = [p](const std::vector<Tensor>& v) mutable {
      p.offset_proj.weight = v[1];
      p.offset_proj.bias = v[2];
      return probe_sum(offset_upsample(v[0], p), 14);
    };
    out.push_back({"offset_upsample gradients", grad_check(f, inputs), 1e-4});
  }
  return out;
}

inline std::vector<CheckResult> suite_geometry() {
  std::vector<CheckResult> out;
  NormalSampler rng(505);
  {
    std::vector<Tensor> inputs = {randn(rng, {3}, 0.5)};
    auto f = [](const std::vector<Tensor>& v) {
      return probe_sum(rotation_from_axis_angle(v[0]), 15);
    };
    out.push_back({"rotation_from_axis_angle", grad_check(f, inputs), 1e-4});
  }
  {
    Tensor tiny = Tensor::from_data({3}, {1e-6, -2e-6, 1.5e-6});
    auto f = [](const std::vector<Tensor>& v) {
      return probe_sum(rotation_from_axis_angle(v[0]), 16);
    };
    out.push_back({"rotation small-angle branch", grad_check(f, {tiny}), 1e-4});
  }
  {
    CameraModel cam;
    cam.fx = cam.fy = 4.0;
    cam.cx = 2.4;
    cam.cy = 1.9;
    cam.width = 5;
    cam.height = 4;
    Tensor depth = Tensor::zeros({1, 4, 5});
    for (long i = 0; i < depth.numel(); ++i) depth.data()[i] = 5.0 + rng.uniform();
    Tensor src = randn(rng, {2, 4, 5});
    src.set_requires_grad(false);
    Tensor aa = Tensor::from_data({3}, {0.01, -0.008, 0.012});
    Tensor tr = Tensor::from_data({3}, {0.05, 0.03, 0.02});
    auto f = [cam, src](const std::vector<Tensor>& v) {
      Tensor points = backproject(v[0], cam);
      Tensor rot = rotation_from_axis_angle(v[1]);
      SampleGrid grid = project(points, cam, rot, v[2]);
      return probe_sum(warp(src, grid), 17);
    };
    out.push_back(
        {"backproject/project/warp chain", grad_check(f, {depth, aa, tr}), 1e-4});
  }
  return out;
}

/// Finite-difference check of the complete training objective against the
/// tape, probing a few elements of every parameter tensor.
inline real full_loss_gradcheck(int probes_per_tensor = 2, uint64_t seed = 91) {
  SceneSpec scene = default_scene(64, 32, 3);
  auto [f0, d0] = render(scene, 0);
  auto [f1, d1] = render(scene, 1);
  auto [f2, d2] = render(scene, 2);
  FrameTriplet sample;
  sample.target = f1;
  sample.sources = {f0, f2};

  DepthNetConfig dc;
  dc.channels = {6, 8, 10, 12};
  DepthNet depth_net = DepthNet::build(dc, seed);
  PoseNet pose_net = PoseNet::build(seed + 1, {6, 8, 10, 12, 14});
  std::vector<ParamStore*> stores{&depth_net.params, &pose_net.params};

  auto loss_value = [&]() {
    return total_loss(sample, depth_net, pose_net, scene.cam).loss.value();
  };
  for (ParamStore* s : stores) s->zero_grads();
  std::vector<std::vector<real>> analytic;
  {
    Tape tape;
    LossBreakdown lb = total_loss(sample, depth_net, pose_net, scene.cam);
    tape.backward(lb.loss);
    for (ParamStore* s : stores)
      for (auto& [name, p] : s->items)
        analytic.push_back(p.has_grad() ? p.grad()
                                        : std::vector<real>(p.numel(), 0.0));
  }
  std::mt19937_64 prng(seed * 17 + 3);
  const real eps = 1e-5;
  real worst = 0;
  size_t slot = 0;
  for (ParamStore* s : stores)
    for (auto& [name, p] : s->items) {
      const std::vector<real>& g = analytic[slot++];
      for (int k = 0; k < probes_per_tensor; ++k) {
        const long i = static_cast<long>(prng() % static_cast<uint64_t>(p.numel()));
        const real saved = p.data()[i];
        p.data()[i] = saved + eps;
        const real up = loss_value();
        p.data()[i] = saved - eps;
        const real dn = loss_value();
        p.data()[i] = saved;
        const real numeric = (up - dn) / (2 * eps);
        worst = std::max(worst, std::abs(g[i] - numeric) /
                                    std::max<real>(1.0, std::abs(numeric)));
      }
    }
  return worst;
}

inline std::vector<CheckResult> suite_full() {
  return {{"full loss pipeline (finite differences)", full_loss_gradcheck(), 1e-3}};
}

inline std::vector<CheckResult> suite(const std::string& scope) {
  if (scope == "ops") return suite_ops();
  if (scope == "lka") return suite_lka();
  if (scope == "upsampler") return suite_upsampler();
  if (scope == "geometry") return suite_geometry();
  if (scope == "full") return suite_full();
  throw std::invalid_argument("unknown gradcheck scope: " + scope);
}

inline bool print_results(const std::vector<CheckResult>& results) {
  bool all = true;
  for (const CheckResult& r : results) {
    std::printf("%-45s max err %11.4e  tol %8.1e  %s\n", r.name.c_str(), r.err,
                r.tol, r.pass() ? "pass" : "FAIL");
    all = all && r.pass();
  }
  return all;
}

}  // namespace checks
}  // namespace lkad
