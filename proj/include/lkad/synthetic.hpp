#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lkad/geometry.hpp"
#include "lkad/io.hpp"
#include "lkad/params.hpp"

namespace lkad {

/// Axis-aligned box in world coordinates (y points down; the ground plane
/// is y = ground_y).
struct SceneBox {
  std::array<real, 3> lo{0, 0, 0};
  std::array<real, 3> hi{0, 0, 0};
};

/// Analytic scene: textured ground plane plus a few boxes, a camera
/// trajectory (camera-to-world), and optional Gaussian pixel noise.
struct SceneSpec {
  CameraModel cam;
  std::vector<SceneBox> boxes;
  std::vector<RigidTransform> trajectory;  // camera-to-world
  real ground_y = 1.5;                     // plane height below the camera
  real far_plane = 100.0;
  real noise_sigma = 0.0;
  uint64_t seed = 7;
  // Smooth multi-frequency texture; low frequencies keep the bilinear
  // interpolation floor low.
  real tex_base = 0.5;
  real tex_amp = 0.28;

  void validate() const {
    cam.validate();
    if (trajectory.size() < 3)
      throw std::invalid_argument("SceneSpec: trajectory length must be >= 3");
    if (noise_sigma < 0) throw std::invalid_argument("SceneSpec: negative noise");
  }
};

/// Default desk-scale scene: ground plane, two boxes, lateral + forward
/// camera translation (pure rotation would carry no depth signal).
inline SceneSpec default_scene(int width, int height, int frames = 10) {
  SceneSpec spec;
  spec.cam.width = width;
  spec.cam.height = height;
  spec.cam.fx = 0.58 * width;
  spec.cam.fy = 1.92 * height;
  spec.cam.cx = 0.5 * width;
  spec.cam.cy = 0.5 * height;
  spec.boxes.push_back({{-2.5, 0.3, 7.0}, {-0.8, 1.5, 9.0}});
  spec.boxes.push_back({{1.2, 0.6, 10.0}, {3.0, 1.5, 12.5}});
  for (int k = 0; k < frames; ++k) {
    RigidTransform pose;
    pose.translation = {0.024 * k, 0.0, 0.088 * k};
    spec.trajectory.push_back(pose);
  }
  return spec;
}

namespace detail {

inline std::array<real, 3> scene_color(const SceneSpec& spec,
                                       const std::array<real, 3>& p) {
  const real x = p[0], y = p[1], z = p[2];
  auto tex = [&](real a, real b, real phase) {
    return spec.tex_base +
           spec.tex_amp * std::sin(a * x + b * z + 0.9 * y + phase) +
           0.08 * std::sin(1.9 * a * x - 1.3 * b * z + phase * 2.0);
  };
  auto cl = [](real v) { return std::min(0.98, std::max(0.02, v)); };
  return {cl(tex(0.55, 0.35, 0.0)), cl(tex(0.42, 0.52, 2.1)),
          cl(tex(0.66, 0.27, 4.2))};
}

/// Ray / axis-aligned box intersection; returns entry distance or +inf.
inline real ray_box(const std::array<real, 3>& o, const std::array<real, 3>& d,
                    const SceneBox& b) {
  real t0 = 0, t1 = std::numeric_limits<real>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (o[a] < b.lo[a] || o[a] > b.hi[a])
        return std::numeric_limits<real>::infinity();
      continue;
    }
    real ta = (b.lo[a] - o[a]) / d[a];
    real tb = (b.hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || t1 < 1e-6) return std::numeric_limits<real>::infinity();
  return t0 > 1e-6 ? t0 : std::numeric_limits<real>::infinity();
}

}  // namespace detail

/// Ray-casts one frame; returns the image in [0,1] and exact depth in
/// meters (camera z of the nearest hit; misses get the far plane).
inline std::pair<Tensor, Tensor> render(const SceneSpec& spec, int frame_index) {
  spec.validate();
  if (frame_index < 0 ||
      frame_index >= static_cast<int>(spec.trajectory.size()))
    throw std::invalid_argument("render: frame index out of range");
  const RigidTransform& pose = spec.trajectory[frame_index];  // cam-to-world
  const CameraModel& cam = spec.cam;
  const int h = cam.height, w = cam.width;
  Tensor image = Tensor::zeros({3, h, w});
  Tensor depth = Tensor::zeros({1, h, w});
  const long plane = static_cast<long>(h) * w;
  NormalSampler noise(spec.seed * 1000003u + static_cast<uint64_t>(frame_index));
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      // Camera-frame ray with unit z; the hit parameter t is then exactly
      // the camera-frame depth.
      const std::array<real, 3> dc{(j - cam.cx) / cam.fx, (i - cam.cy) / cam.fy,
                                   1.0};
      std::array<real, 3> dw{0, 0, 0};
      for (int r = 0; r < 3; ++r)
        dw[r] = pose.rotation[r * 3 + 0] * dc[0] +
                pose.rotation[r * 3 + 1] * dc[1] +
                pose.rotation[r * 3 + 2] * dc[2];
      const std::array<real, 3>& o = pose.translation;
      real best = std::numeric_limits<real>::infinity();
      // Ground plane y = ground_y.
      if (dw[1] > 1e-12) {
        const real t = (spec.ground_y - o[1]) / dw[1];
        if (t > 1e-6) best = t;
      }
      for (const SceneBox& b : spec.boxes)
        best = std::min(best, detail::ray_box(o, dw, b));
      std::array<real, 3> color;
      real z;
      if (best > spec.far_plane) {
        z = spec.far_plane;
        color = {0.45, 0.55, 0.7};  // background
      } else {
        z = best;
        const std::array<real, 3> hit{o[0] + best * dw[0], o[1] + best * dw[1],
                                      o[2] + best * dw[2]};
        color = detail::scene_color(spec, hit);
      }
      const long px = static_cast<long>(i) * w + j;
      depth.data()[px] = z;
      for (int c = 0; c < 3; ++c) {
        real v = color[c];
        if (spec.noise_sigma > 0) v += noise.next(spec.noise_sigma);
        image.data()[c * plane + px] = std::min(1.0, std::max(0.0, v));
      }
    }
  return {image, depth};
}

/// Writes the full sequence: frame_%04d.ppm, depth_%04d.lkdt,
/// intrinsics.txt, poses.txt (3x4 row-major camera-to-world per line), and
/// a README describing the layout.
inline void make_sequence(const SceneSpec& spec, const std::string& dir) {
  spec.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create dataset directory: " + dir);
  for (size_t k = 0; k < spec.trajectory.size(); ++k) {
    auto [image, depth] = render(spec, static_cast<int>(k));
    char name[64];
    std::snprintf(name, sizeof(name), "/frame_%04zu.ppm", k);
    save_ppm(dir + name, image);
    std::snprintf(name, sizeof(name), "/depth_%04zu.lkdt", k);
    save_lkdt(dir + name, depth);
  }
  save_intrinsics(dir + "/intrinsics.txt", spec.cam);
  {
    std::ofstream f(dir + "/poses.txt");
    if (!f) throw std::runtime_error("cannot write poses.txt");
    f.precision(17);
    for (const RigidTransform& p : spec.trajectory) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) f << p.rotation[i * 3 + j] << " ";
        f << p.translation[i] << (i == 2 ? "\n" : " ");
      }
    }
  }
  {
    std::ofstream f(dir + "/README");
    f << "Synthetic sequence.\n"
      << "frame_%04d.ppm   binary P6 images, 8-bit\n"
      << "depth_%04d.lkdt  ground-truth depth in meters, LKDT tensors [1,H,W]\n"
      << "intrinsics.txt   fx fy cx cy W H\n"
      << "poses.txt        one 3x4 row-major camera-to-world transform per line\n";
  }
}

/// A loaded sequence directory.
struct Sequence {
  CameraModel cam;
  std::vector<Tensor> frames;
  std::vector<Tensor> depths;               // empty if absent
  std::vector<RigidTransform> poses;        // empty if absent
};

inline Sequence load_sequence(const std::string& dir) {
  namespace fs = std::filesystem;
  Sequence seq;
  seq.cam = load_intrinsics(dir + "/intrinsics.txt");
  for (int k = 0;; ++k) {
    char name[64];
    std::snprintf(name, sizeof(name), "/frame_%04d.ppm", k);
    if (!fs::exists(dir + name)) break;
    seq.frames.push_back(load_ppm(dir + name));
    std::snprintf(name, sizeof(name), "/depth_%04d.lkdt", k);
    if (fs::exists(dir + name)) seq.depths.push_back(load_lkdt(dir + name));
  }
  if (seq.frames.empty())
    throw std::runtime_error("no frames found in " + dir);
  std::ifstream pf(dir + "/poses.txt");
  if (pf) {
    std::string line;
    while (std::getline(pf, line)) {
      if (line.empty()) continue;
      std::istringstream is(line);
      RigidTransform p;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) is >> p.rotation[i * 3 + j];
        is >> p.translation[i];
      }
      if (!is) throw std::runtime_error("bad poses.txt line");
      seq.poses.push_back(p);
    }
  }
  return seq;
}

}  // namespace lkad
