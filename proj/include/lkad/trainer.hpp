#pragma once

#include <filesystem>

#include "lkad/config.hpp"
#include "lkad/losses.hpp"
#include "lkad/metrics.hpp"
#include "lkad/optim.hpp"
#include "lkad/synthetic.hpp"

namespace lkad {

inline DepthNetConfig make_depth_config(const RunConfig& cfg) {
  DepthNetConfig dc;
  dc.channels = cfg.channels;
  dc.use_lka = cfg.use_lka;
  dc.use_offset_upsampler = cfg.use_offset_upsampler;
  dc.min_depth = cfg.min_depth;
  dc.max_depth = cfg.max_depth;
  return dc;
}

/// Depth and pose parameters serialized as one checkpoint.
inline void save_model(const std::string& path, const DepthNet& depth,
                       const PoseNet& pose, const std::string& hash) {
  ParamStore merged;
  merged.items = depth.params.items;
  merged.items.insert(merged.items.end(), pose.params.items.begin(),
                      pose.params.items.end());
  save_checkpoint(path, merged, hash);
}

inline void load_model(const std::string& path, DepthNet& depth, PoseNet& pose,
                       const std::string& expect_signature = "") {
  Checkpoint ck = load_checkpoint(path);
  if (!expect_signature.empty() && ck.config_hash != expect_signature)
    throw std::runtime_error(
        "checkpoint/config mismatch:" +
        signature_mismatch(ck.config_hash, expect_signature));
  ParamStore merged;
  merged.items = depth.params.items;
  merged.items.insert(merged.items.end(), pose.params.items.begin(),
                      pose.params.items.end());
  restore_params(merged, ck);
}

struct TrainResult {
  long steps = 0;
  real first_loss = 0, last_loss = 0;
  real first_photometric = 0, last_photometric = 0;
  std::string final_checkpoint;
};

namespace detail {

/// Hand-rolled Fisher-Yates so the visit order is identical across standard
/// library versions.
inline void shuffle_indices(std::vector<int>& idx, uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng() % i]);
}

}  // namespace detail

/// Self-supervised training over one sequence directory. Each sample is a
/// target frame with its two temporal neighbors as sources. Writes
/// loss_log.csv and per-epoch checkpoints into out_dir; aborts with a
/// diagnostic dump if the loss stops being finite.
inline TrainResult train(const RunConfig& cfg, const Sequence& seq,
                         DepthNet& depth_net, PoseNet& pose_net,
                         const std::string& out_dir, bool verbose = true) {
  cfg.validate();
  const int n = static_cast<int>(seq.frames.size());
  if (n < 3) throw std::invalid_argument("train: need at least 3 frames");
  if (seq.cam.height != cfg.height || seq.cam.width != cfg.width)
    throw std::invalid_argument("train: sequence resolution differs from config");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream csv(out_dir + "/loss_log.csv");
  if (!csv) throw std::runtime_error("cannot write loss_log.csv in " + out_dir);
  csv << "step,total,photometric,smoothness,masked_fraction\n";
  csv.precision(17);

  std::vector<ParamStore*> stores{&depth_net.params, &pose_net.params};
  Adam opt;
  TrainResult res;
  const std::string hash = cfg.model_signature();

  std::vector<int> targets;
  for (int i = 1; i < n - 1; ++i) targets.push_back(i);

  long step = 0;
  bool done = false;
  for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    std::vector<int> order = targets;
    detail::shuffle_indices(order, cfg.seed * 0x9e3779b97f4a7c15ull +
                                       static_cast<uint64_t>(epoch));
    const real lr = lr_at_epoch(epoch, cfg.lr, cfg.lr_final, cfg.lr_decay_epoch);
    for (size_t b = 0; b < order.size() && !done; b += cfg.batch) {
      for (ParamStore* s : stores) s->zero_grads();
      Tape tape;
      Tensor batch_loss = Tensor::scalar(0.0);
      real photo = 0, smooth = 0, masked = 0;
      int count = 0;
      for (size_t k = b; k < std::min(order.size(), b + cfg.batch); ++k) {
        FrameTriplet sample;
        const int t = order[k];
        sample.target = seq.frames[t];
        sample.sources = {seq.frames[t - 1], seq.frames[t + 1]};
        LossBreakdown lb = total_loss(sample, depth_net, pose_net, seq.cam,
                                      cfg.smoothness_weight);
        batch_loss = batch_loss + lb.loss;
        photo += lb.photometric;
        smooth += lb.smoothness;
        masked += lb.masked_fraction;
        ++count;
      }
      batch_loss = affine(batch_loss, 1.0 / count, 0.0);
      const real total = batch_loss.value();
      photo /= count;
      smooth /= count;
      masked /= count;
      if (!std::isfinite(total)) {
        save_model(out_dir + "/diverged.lkck", depth_net, pose_net, hash);
        std::ostringstream msg;
        msg << "training diverged at step " << step << " (loss " << total
            << "); state dumped to " << out_dir << "/diverged.lkck, targets:";
        for (size_t k = b; k < std::min(order.size(), b + cfg.batch); ++k)
          msg << " " << order[k];
        throw std::runtime_error(msg.str());
      }
      tape.backward(batch_loss);
      opt.step(stores, lr);
      csv << step << "," << total << "," << photo << "," << smooth << ","
          << masked << "\n";
      if (step == 0) {
        res.first_loss = total;
        res.first_photometric = photo;
      }
      res.last_loss = total;
      res.last_photometric = photo;
      ++step;
      if (verbose && step % 25 == 0)
        std::printf("step %ld  loss %.6f  photo %.6f  smooth %.6f\n", step,
                    total, photo, smooth);
      if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
    }
    if ((epoch + 1) % cfg.checkpoint_every == 0 || epoch + 1 == cfg.epochs) {
      char name[64];
      std::snprintf(name, sizeof(name), "/checkpoint_ep%03d.lkck", epoch + 1);
      save_model(out_dir + name, depth_net, pose_net, hash);
    }
  }
  res.steps = step;
  res.final_checkpoint = out_dir + "/checkpoint_final.lkck";
  save_model(res.final_checkpoint, depth_net, pose_net, hash);
  csv.close();
  return res;
}

/// Full-resolution depth prediction for one frame (no tape).
inline Tensor predict_depth(const DepthNet& net, const Tensor& image) {
  DisparityPyramid pyr = net.forward(image);
  return disp_to_depth(pyr.disps[0], net.cfg.min_depth, net.cfg.max_depth);
}

/// Evaluates every frame with ground-truth depth; returns per-frame reports
/// plus the pixel-weighted merge at the back.
inline std::vector<MetricsReport> evaluate(const DepthNet& net,
                                           const Sequence& seq,
                                           bool median_scaling = true) {
  if (seq.depths.size() != seq.frames.size())
    throw std::invalid_argument("evaluate: sequence has no full depth set");
  std::vector<MetricsReport> reports;
  for (size_t i = 0; i < seq.frames.size(); ++i)
    reports.push_back(
        compute_metrics(predict_depth(net, seq.frames[i]), seq.depths[i],
                        median_scaling));
  reports.push_back(merge_reports(reports));
  return reports;
}

}  // namespace lkad
