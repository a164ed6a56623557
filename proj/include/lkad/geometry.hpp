#pragma once

#include <array>
#include <fstream>
#include <sstream>

#include "lkad/ops.hpp"
#include "lkad/params.hpp"
#include "lkad/tensor.hpp"

namespace lkad {

/// Pinhole intrinsics. Focal lengths and principal point are in pixels.
struct CameraModel {
  real fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const {
    if (fx <= 0 || fy <= 0) throw std::invalid_argument("camera: focal <= 0");
    if (cx < 0 || cx >= width || cy < 0 || cy >= height)
      throw std::invalid_argument("camera: principal point outside image");
  }
};

/// Intrinsics file: "fx fy cx cy W H" on one line.
inline void save_intrinsics(const std::string& path, const CameraModel& cam) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f.precision(17);
  f << cam.fx << " " << cam.fy << " " << cam.cx << " " << cam.cy << " "
    << cam.width << " " << cam.height << "\n";
}

inline CameraModel load_intrinsics(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  CameraModel cam;
  if (!(f >> cam.fx >> cam.fy >> cam.cx >> cam.cy >> cam.width >> cam.height))
    throw std::runtime_error("bad intrinsics file: " + path);
  cam.validate();
  return cam;
}

/// SE(3) pose as rotation matrix (row-major) + translation in meters.
struct RigidTransform {
  std::array<real, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<real, 3> translation{0, 0, 0};

  static RigidTransform identity() { return {}; }

  std::array<real, 3> apply(const std::array<real, 3>& p) const {
    const auto& r = rotation;
    return {r[0] * p[0] + r[1] * p[1] + r[2] * p[2] + translation[0],
            r[3] * p[0] + r[4] * p[1] + r[5] * p[2] + translation[1],
            r[6] * p[0] + r[7] * p[1] + r[8] * p[2] + translation[2]};
  }

  RigidTransform compose(const RigidTransform& other) const {
    // this * other (apply other first)
    RigidTransform out;
    const auto& a = rotation;
    const auto& b = other.rotation;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        real s = 0;
        for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
        out.rotation[i * 3 + j] = s;
      }
    auto t = apply(other.translation);
    out.translation = t;
    return out;
  }

  RigidTransform inverse() const {
    RigidTransform out;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out.rotation[i * 3 + j] = rotation[j * 3 + i];
    for (int i = 0; i < 3; ++i) {
      real s = 0;
      for (int j = 0; j < 3; ++j) s -= out.rotation[i * 3 + j] * translation[j];
      out.translation[i] = s;
    }
    return out;
  }

  /// Max deviation of R^T R from I plus |det(R) - 1|.
  real orthonormality_error() const {
    real worst = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        real s = 0;
        for (int k = 0; k < 3; ++k) s += rotation[k * 3 + i] * rotation[k * 3 + j];
        worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
    const auto& r = rotation;
    real det = r[0] * (r[4] * r[8] - r[5] * r[7]) -
               r[1] * (r[3] * r[8] - r[5] * r[6]) +
               r[2] * (r[3] * r[7] - r[4] * r[6]);
    return std::max(worst, std::abs(det - 1.0));
  }
};

// ---------------------------------------------------------------------------
// Rodrigues coefficients as functions of theta^2, with series fallbacks that
// keep values and derivatives finite at zero.

namespace detail {

inline real sinc_sqrt(real s) {  // sin(sqrt(s)) / sqrt(s)
  if (s < 1e-12) return 1.0 - s / 6.0 + s * s / 120.0;
  const real th = std::sqrt(s);
  return std::sin(th) / th;
}

inline real sinc_sqrt_d(real s) {
  if (s < 1e-8) return -1.0 / 6.0 + s / 60.0;
  const real th = std::sqrt(s);
  return (th * std::cos(th) - std::sin(th)) / (2.0 * s * th);
}

inline real versine_ratio(real s) {  // (1 - cos(sqrt(s))) / s
  if (s < 1e-12) return 0.5 - s / 24.0 + s * s / 720.0;
  return (1.0 - std::cos(std::sqrt(s))) / s;
}

inline real versine_ratio_d(real s) {
  if (s < 1e-8) return -1.0 / 24.0 + s / 360.0;
  const real th = std::sqrt(s);
  return std::sin(th) / (2.0 * th * s) - (1.0 - std::cos(th)) / (s * s);
}

}  // namespace detail

/// Rodrigues rotation from an axis-angle 3-vector; differentiable.
inline Tensor rotation_from_axis_angle(const Tensor& axis_angle) {
  if (axis_angle.numel() != 3)
    throw std::invalid_argument("rotation_from_axis_angle expects a 3-vector");
  Tensor w = reshape(axis_angle, {3});
  Tensor s = sum(w * w);  // theta^2
  Tensor a = map_unary(s, detail::sinc_sqrt,
                       [](real v, real) { return detail::sinc_sqrt_d(v); },
                       "sinc_sqrt");
  Tensor b = map_unary(s, detail::versine_ratio,
                       [](real v, real) { return detail::versine_ratio_d(v); },
                       "versine_ratio");
  Tensor k = skew(w);
  Tensor k2 = matmul(k, k);
  Tensor eye = Tensor::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  return eye + k * a + k2 * b;
}

/// SE(3) exponential on raw values. theta below 1e-8 falls back to the
/// first-order I + [w]x.
inline RigidTransform se3_exp(const std::array<real, 3>& axis_angle,
                              const std::array<real, 3>& translation) {
  const real s = axis_angle[0] * axis_angle[0] + axis_angle[1] * axis_angle[1] +
                 axis_angle[2] * axis_angle[2];
  RigidTransform out;
  out.translation = translation;
  const real wx = axis_angle[0], wy = axis_angle[1], wz = axis_angle[2];
  const real kk[9] = {0, -wz, wy, wz, 0, -wx, -wy, wx, 0};
  real a, b;
  if (std::sqrt(s) < 1e-8) {
    a = 1.0;
    b = 0.0;  // I + [w]x only
  } else {
    a = detail::sinc_sqrt(s);
    b = detail::versine_ratio(s);
  }
  real k2[9];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      real v = 0;
      for (int k = 0; k < 3; ++k) v += kk[i * 3 + k] * kk[k * 3 + j];
      k2[i * 3 + j] = v;
    }
  for (int i = 0; i < 9; ++i)
    out.rotation[i] = (i % 4 == 0 ? 1.0 : 0.0) + a * kk[i] + b * k2[i];
  return out;
}

inline RigidTransform se3_exp(const Tensor& axis_angle, const Tensor& translation) {
  if (axis_angle.numel() != 3 || translation.numel() != 3)
    throw std::invalid_argument("se3_exp expects two 3-vectors");
  return se3_exp(
      {axis_angle.data()[0], axis_angle.data()[1], axis_angle.data()[2]},
      {translation.data()[0], translation.data()[1], translation.data()[2]});
}

// ---------------------------------------------------------------------------

/// Camera-frame points from a depth map: P(i,j) = d(i,j) * ((j-cx)/fx, (i-cy)/fy, 1).
inline Tensor backproject(const Tensor& depth, const CameraModel& cam) {
  if (depth.rank() != 3 || depth.extent(0) != 1)
    throw std::invalid_argument("backproject expects [1,H,W]");
  const int h = depth.extent(1), w = depth.extent(2);
  for (long i = 0; i < depth.numel(); ++i)
    if (depth.data()[i] <= 0)
      throw std::domain_error("backproject: nonpositive depth");
  Tensor dirs = Tensor::zeros({3, h, w});
  real* px = dirs.data();
  real* py = px + static_cast<long>(h) * w;
  real* pz = py + static_cast<long>(h) * w;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const long p = static_cast<long>(i) * w + j;
      px[p] = (j - cam.cx) / cam.fx;
      py[p] = (i - cam.cy) / cam.fy;
      pz[p] = 1.0;
    }
  return dirs * reshape(depth, {h, w});
}

/// Projects transformed points to the image plane, z clamped below at 1e-3 m.
inline SampleGrid project(const Tensor& points, const CameraModel& cam,
                          const Tensor& rotation, const Tensor& translation) {
  if (points.rank() != 3 || points.extent(0) != 3)
    throw std::invalid_argument("project expects [3,H,W]");
  const int h = points.extent(1), w = points.extent(2);
  Tensor pm = reshape(points, {3, h * w});
  Tensor pc = add_colvec(matmul(rotation, pm), reshape(translation, {3}));
  Tensor x = slice_rows(pc, 0, 1);
  Tensor y = slice_rows(pc, 1, 2);
  Tensor z = clamp_min(slice_rows(pc, 2, 3), 1e-3);
  Tensor u = affine(x / z, cam.fx, cam.cx);
  Tensor v = affine(y / z, cam.fy, cam.cy);
  return SampleGrid{reshape(concat_axis0(u, v), {2, h, w})};
}

inline SampleGrid project(const Tensor& points, const CameraModel& cam,
                          const RigidTransform& pose) {
  Tensor r = Tensor::from_data({3, 3}, std::vector<real>(pose.rotation.begin(),
                                                         pose.rotation.end()));
  Tensor t = Tensor::from_data({3}, std::vector<real>(pose.translation.begin(),
                                                      pose.translation.end()));
  return project(points, cam, r, t);
}

inline Tensor warp(const Tensor& source, const SampleGrid& grid) {
  return grid_sample(source, grid);
}

// ---------------------------------------------------------------------------
// Pose network: target and source frames stacked to 6 channels, five
// stride-2 conv+ELU stages, global mean pool, linear head to 6 values,
// output scaled by 0.01 to keep early warps near identity.

struct PoseNet {
  std::vector<ConvSpec> convs;
  Tensor fc_weight;  // [6, C_last]
  Tensor fc_bias;    // [6]
  ParamStore params;

  static PoseNet build(uint64_t seed, const std::vector<int>& channels = {
                                          16, 32, 64, 128, 256}) {
    NormalSampler rng(seed);
    PoseNet net;
    int in_c = 6;
    for (size_t i = 0; i < channels.size(); ++i) {
      ConvSpec c;
      c.weight = net.params.add(
          "pose.conv" + std::to_string(i) + ".weight",
          he_normal(rng, {channels[i], in_c, 3, 3}, static_cast<long>(in_c) * 9));
      c.bias = net.params.add("pose.conv" + std::to_string(i) + ".bias",
                              Tensor::zeros({channels[i]}));
      c.stride_h = c.stride_w = 2;
      c.pad_h = c.pad_w = 1;
      net.convs.push_back(c);
      in_c = channels[i];
    }
    net.fc_weight = net.params.add("pose.fc.weight",
                                   he_normal(rng, {6, in_c}, in_c));
    net.fc_bias = net.params.add("pose.fc.bias", Tensor::zeros({6}));
    return net;
  }

  /// Returns (axis_angle, translation), both scaled by 0.01.
  std::pair<Tensor, Tensor> forward(const Tensor& target,
                                    const Tensor& source) const {
    if (target.shape() != source.shape())
      throw std::invalid_argument("pose_forward: frame shape mismatch");
    Tensor x = concat_channels(target, source);
    for (const ConvSpec& c : convs) x = elu(conv2d(x, c));
    Tensor feat = mean_spatial(x);
    Tensor v = add_colvec(matmul(fc_weight, reshape(feat, {feat.extent(0), 1})),
                          fc_bias);
    v = affine(v, 0.01, 0.0);
    Tensor aa = reshape(slice_rows(v, 0, 3), {3});
    Tensor tr = reshape(slice_rows(v, 3, 6), {3});
    return {aa, tr};
  }

  long param_count() const { return params.total_count(); }

  long mac_count(int h, int w) const {
    long macs = 0;
    for (const ConvSpec& c : convs) {
      macs += conv_macs(c, h, w);
      h = (h + 1) / 2;
      w = (w + 1) / 2;
    }
    macs += fc_weight.numel();
    return macs;
  }
};

inline std::pair<Tensor, Tensor> pose_forward(const PoseNet& net,
                                              const Tensor& target,
                                              const Tensor& source) {
  return net.forward(target, source);
}

}  // namespace lkad
