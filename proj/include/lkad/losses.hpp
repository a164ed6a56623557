#pragma once

#include <limits>

#include "lkad/depth_net.hpp"
#include "lkad/geometry.hpp"
#include "lkad/ops.hpp"

namespace lkad {

/// Local SSIM map with 3x3 mean/variance windows (replicate padding),
/// C1 = 0.01^2, C2 = 0.03^2. Same shape as the inputs.
inline Tensor ssim(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("ssim: shape mismatch");
  const real c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  Tensor mu_a = box_mean3(a);
  Tensor mu_b = box_mean3(b);
  Tensor var_a = box_mean3(a * a) - mu_a * mu_a;
  Tensor var_b = box_mean3(b * b) - mu_b * mu_b;
  Tensor cov = box_mean3(a * b) - mu_a * mu_b;
  Tensor num = affine(mu_a * mu_b, 2.0, c1) * affine(cov, 2.0, c2);
  Tensor den = affine(mu_a * mu_a + mu_b * mu_b, 1.0, c1) *
               affine(var_a + var_b, 1.0, c2);
  return num / den;
}

/// pe = 0.85 * clamp((1 - ssim)/2, [0,1]) + 0.15 * |pred - target|,
/// channel-averaged to [1,H,W].
inline Tensor photometric_error(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape())
    throw std::invalid_argument("photometric_error: shape mismatch");
  Tensor dssim = clamp(affine(ssim(pred, target), -0.5, 0.5), 0.0, 1.0);
  Tensor l1 = abs_t(pred - target);
  Tensor pe = mean_over_axis0(affine(dssim, 0.85, 0.0) + affine(l1, 0.15, 0.0));
  return reshape(pe, {1, pred.extent(1), pred.extent(2)});
}

/// Per-pixel minimum across warped errors, with static pixels masked out:
/// mask = 1 where min(warped) beats min(identity) by more than 1e-5 (exact
/// ties resolve to masking out). The loss map is zeroed where mask = 0.
inline std::pair<Tensor, Tensor> min_reprojection_with_automask(
    const std::vector<Tensor>& pe_warped, const std::vector<Tensor>& pe_identity) {
  if (pe_warped.empty())
    throw std::invalid_argument("min_reprojection: needs at least one source");
  Tensor stacked = pe_warped[0];
  for (size_t i = 1; i < pe_warped.size(); ++i)
    stacked = concat_axis0(stacked, pe_warped[i]);
  const int h = stacked.extent(1), w = stacked.extent(2);
  Tensor min_warped = reshape(min_over_axis(stacked, 0), {1, h, w});
  // Identity errors only gate the mask; no gradient flows through them.
  Tensor mask = Tensor::zeros({1, h, w});
  {
    std::vector<real> min_id(static_cast<size_t>(h) * w,
                             std::numeric_limits<real>::infinity());
    for (const Tensor& pe : pe_identity) {
      if (pe.shape() != min_warped.shape())
        throw std::invalid_argument("min_reprojection: identity shape mismatch");
      for (long i = 0; i < pe.numel(); ++i)
        min_id[i] = std::min(min_id[i], pe.data()[i]);
    }
    for (long i = 0; i < mask.numel(); ++i)
      mask.data()[i] = (min_warped.data()[i] < min_id[i] - 1e-5) ? 1.0 : 0.0;
  }
  return {min_warped * mask, mask};
}

/// Edge-aware smoothness of mean-normalized disparity.
inline Tensor smoothness(const Tensor& disp, const Tensor& image) {
  if (disp.rank() != 3 || disp.extent(0) != 1)
    throw std::invalid_argument("smoothness expects disp [1,H,W]");
  if (image.extent(1) != disp.extent(1) || image.extent(2) != disp.extent(2))
    throw std::invalid_argument("smoothness: spatial mismatch");
  Tensor m = mean(disp);
  if (m.value() == 0.0) throw std::domain_error("smoothness: mean(disp) == 0");
  Tensor norm = disp / m;
  Tensor gx = abs_t(diff_x(norm));
  Tensor gy = abs_t(diff_y(norm));
  Tensor ix = exp_t(affine(mean_over_axis0(abs_t(diff_x(image))), -1.0, 0.0));
  Tensor iy = exp_t(affine(mean_over_axis0(abs_t(diff_y(image))), -1.0, 0.0));
  Tensor wx = gx * reshape(ix, {1, ix.extent(0), ix.extent(1)});
  Tensor wy = gy * reshape(iy, {1, iy.extent(0), iy.extent(1)});
  return mean(wx) + mean(wy);
}

struct LossBreakdown {
  real total = 0;
  real photometric = 0;
  real smoothness = 0;
  real masked_fraction = 0;  // fraction of pixels masked out, averaged
  Tensor loss;               // differentiable scalar
};

/// One training sample: a target frame and its temporal neighbors.
struct FrameTriplet {
  Tensor target;                // [3,H,W]
  std::vector<Tensor> sources;  // >= 1 frames [3,H,W]
};

/// Full self-supervised objective for one sample: per scale, upsample
/// disparity to full resolution, warp each source via predicted pose,
/// min-reprojection with auto-masking, plus edge-aware smoothness decayed
/// by 1/2^s at each scale. Scales are averaged.
inline LossBreakdown total_loss(const FrameTriplet& sample,
                                const DepthNet& depth_net,
                                const PoseNet& pose_net, const CameraModel& cam,
                                real smoothness_weight = 1e-3) {
  if (sample.sources.empty())
    throw std::invalid_argument("total_loss: batch needs >= 1 source frames");
  DisparityPyramid pyr = depth_net.forward(sample.target);

  // Pose per source (shared across scales).
  std::vector<std::pair<Tensor, Tensor>> poses;
  std::vector<Tensor> pe_identity;
  for (const Tensor& src : sample.sources) {
    poses.push_back(pose_net.forward(sample.target, src));
    pe_identity.push_back(photometric_error(src, sample.target).detach_copy());
  }

  // Image pyramid for the per-scale smoothness term.
  std::vector<Tensor> images(4);
  images[0] = sample.target;
  for (int s = 1; s < 4; ++s) images[s] = avg_pool2(images[s - 1].detach_copy());

  LossBreakdown out;
  Tensor total = Tensor::scalar(0.0);
  Tensor photo_sum = Tensor::scalar(0.0);
  Tensor smooth_sum = Tensor::scalar(0.0);
  real masked = 0;
  for (int s = 0; s < 4; ++s) {
    Tensor disp_full = s == 0 ? pyr.disps[0] : bilinear_resize(pyr.disps[s], 1 << s);
    Tensor depth = disp_to_depth(disp_full, depth_net.cfg.min_depth,
                                 depth_net.cfg.max_depth);
    Tensor points = backproject(depth, cam);
    std::vector<Tensor> pe_warped;
    for (size_t k = 0; k < sample.sources.size(); ++k) {
      Tensor rot = rotation_from_axis_angle(poses[k].first);
      SampleGrid grid = project(points, cam, rot, poses[k].second);
      Tensor warped = warp(sample.sources[k], grid);
      pe_warped.push_back(photometric_error(warped, sample.target));
    }
    auto [loss_map, mask] = min_reprojection_with_automask(pe_warped, pe_identity);
    // Per-pixel minimum over warped AND identity errors: masked pixels
    // contribute the (detached) identity error, so the reported photometric
    // value starts at the static-scene floor and falls as warps beat it;
    // gradients are identical to the zeroed map since identity is constant.
    Tensor floor_map = Tensor::zeros(mask.shape());
    for (long i = 0; i < mask.numel(); ++i) {
      real min_id = std::numeric_limits<real>::infinity();
      for (const Tensor& pe : pe_identity)
        min_id = std::min(min_id, pe.data()[i]);
      if (mask.data()[i] == 0.0) floor_map.data()[i] = min_id;
    }
    photo_sum = photo_sum + mean(loss_map + floor_map);
    real mask_mean = 0;
    for (long i = 0; i < mask.numel(); ++i) mask_mean += mask.data()[i];
    masked += 1.0 - mask_mean / mask.numel();
    smooth_sum =
        smooth_sum + affine(smoothness(pyr.disps[s], images[s]), 1.0 / (1 << s), 0.0);
  }
  photo_sum = affine(photo_sum, 0.25, 0.0);
  smooth_sum = affine(smooth_sum, 0.25, 0.0);
  total = photo_sum + affine(smooth_sum, smoothness_weight, 0.0);
  out.loss = total;
  out.total = total.value();
  out.photometric = photo_sum.value();
  out.smoothness = smooth_sum.value();
  out.masked_fraction = masked / 4.0;
  return out;
}

}  // namespace lkad
