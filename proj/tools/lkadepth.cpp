#include <cstdlib>

#include <CLI11.hpp>

#include "lkad/checks.hpp"
#include "lkad/config.hpp"
#include "lkad/trainer.hpp"

namespace {

using namespace lkad;

int thread_cap() {
  // All model math is single-threaded by design (for determinism); the env
  // var can only lower an already-minimal cap.
  const char* env = std::getenv("LKADEPTH_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? std::min(n, 1) : 1;
}

RunConfig resolve_config(const std::string& config_path,
                         const std::vector<std::string>& sets, long seed) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
  cfg.validate();
  return cfg;
}

void print_model_summary(const RunConfig& cfg, const DepthNet& depth,
                         const PoseNet& pose) {
  const long total = depth.params.total_count() + pose.param_count();
  const long macs =
      depth.mac_count(cfg.height, cfg.width) + pose.mac_count(cfg.height, cfg.width);
  std::printf("parameters: %ld (depth %ld, pose %ld)\n", total,
              depth.params.total_count(), pose.param_count());
  std::printf("approx multiply-accumulates per forward at %dx%d: %ld\n",
              cfg.height, cfg.width, macs);
}

int cmd_train(const RunConfig& cfg, const std::string& data_dir,
              const std::string& out_dir) {
  Sequence seq = load_sequence(data_dir);
  DepthNet depth_net = DepthNet::build(make_depth_config(cfg), cfg.seed);
  PoseNet pose_net = PoseNet::build(cfg.seed + 1);
  print_model_summary(cfg, depth_net, pose_net);
  TrainResult res = train(cfg, seq, depth_net, pose_net, out_dir);
  std::printf("trained %ld steps; loss %.6f -> %.6f (photometric %.6f -> %.6f)\n",
              res.steps, res.first_loss, res.last_loss, res.first_photometric,
              res.last_photometric);
  std::printf("final checkpoint: %s\n", res.final_checkpoint.c_str());
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint,
             const std::string& data_dir, bool median_scaling,
             const std::string& csv_out) {
  Sequence seq = load_sequence(data_dir);
  DepthNet depth_net = DepthNet::build(make_depth_config(cfg), cfg.seed);
  PoseNet pose_net = PoseNet::build(cfg.seed + 1);
  load_model(checkpoint, depth_net, pose_net, cfg.model_signature());
  std::vector<MetricsReport> reports = evaluate(depth_net, seq, median_scaling);
  std::ostringstream csv;
  csv << "frame," << metrics_csv_header() << "\n";
  for (size_t i = 0; i + 1 < reports.size(); ++i)
    csv << i << "," << metrics_csv_row(reports[i]) << "\n";
  csv << "aggregate," << metrics_csv_row(reports.back()) << "\n";
  if (!csv_out.empty()) {
    std::ofstream f(csv_out);
    if (!f) throw std::runtime_error("cannot write " + csv_out);
    f << csv.str();
  }
  std::fputs(csv.str().c_str(), stdout);
  std::fputs(compare_to_paper(reports.back()).c_str(), stdout);
  return 0;
}

Tensor center_crop16(const Tensor& img) {
  const int h = img.extent(1), w = img.extent(2);
  const int ch = h - h % 16, cw = w - w % 16;
  if (ch == h && cw == w) return img;
  if (ch < 16 || cw < 16)
    throw std::runtime_error("image too small after cropping to multiple of 16");
  std::fprintf(stderr,
               "warning: cropping %dx%d to %dx%d (extents must be divisible by 16)\n",
               w, h, cw, ch);
  const int y0 = (h - ch) / 2, x0 = (w - cw) / 2;
  Tensor out = Tensor::zeros({img.extent(0), ch, cw});
  for (int c = 0; c < img.extent(0); ++c)
    for (int i = 0; i < ch; ++i)
      for (int j = 0; j < cw; ++j)
        out.data()[(static_cast<long>(c) * ch + i) * cw + j] =
            img.data()[(static_cast<long>(c) * h + y0 + i) * w + x0 + j];
  return out;
}

int cmd_infer(const RunConfig& cfg, const std::string& checkpoint,
              const std::string& image_path, const std::string& out_prefix) {
  DepthNet depth_net = DepthNet::build(make_depth_config(cfg), cfg.seed);
  PoseNet pose_net = PoseNet::build(cfg.seed + 1);
  load_model(checkpoint, depth_net, pose_net, cfg.model_signature());
  Tensor img = center_crop16(load_ppm(image_path));
  Tensor depth = predict_depth(depth_net, img);
  save_lkdt(out_prefix + "_depth.lkdt", depth);
  // Inverse-depth visualization, min/max normalized to the full 8-bit range.
  real lo = depth.data()[0], hi = depth.data()[0];
  for (long i = 0; i < depth.numel(); ++i) {
    lo = std::min(lo, depth.data()[i]);
    hi = std::max(hi, depth.data()[i]);
  }
  Tensor vis = Tensor::zeros({3, depth.extent(1), depth.extent(2)});
  const long plane = depth.numel();
  for (long i = 0; i < plane; ++i) {
    const real inv = 1.0 / depth.data()[i];
    const real inv_lo = 1.0 / hi, inv_hi = 1.0 / lo;
    const real v = inv_hi > inv_lo ? (inv - inv_lo) / (inv_hi - inv_lo) : 0.0;
    vis.data()[i] = vis.data()[plane + i] = vis.data()[2 * plane + i] = v;
  }
  save_ppm(out_prefix + "_vis.ppm", vis);
  std::printf("wrote %s_depth.lkdt and %s_vis.ppm (depth range %.3f..%.3f m)\n",
              out_prefix.c_str(), out_prefix.c_str(), lo, hi);
  return 0;
}

int cmd_synth(const RunConfig& cfg, const std::string& out_dir) {
  SceneSpec scene = default_scene(cfg.width, cfg.height, cfg.frames);
  scene.seed = cfg.seed;
  scene.noise_sigma = cfg.noise_sigma;
  make_sequence(scene, out_dir);
  std::printf("wrote %d frames (%dx%d) to %s\n", cfg.frames, cfg.width,
              cfg.height, out_dir.c_str());
  return 0;
}

int cmd_gradcheck(const std::string& scope) {
  std::vector<std::string> scopes;
  if (scope == "all")
    scopes = {"ops", "lka", "upsampler", "geometry", "full"};
  else
    scopes = {scope};
  bool all = true;
  for (const std::string& s : scopes) {
    std::printf("-- scope %s --\n", s.c_str());
    all = checks::print_results(checks::suite(s)) && all;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised monocular depth: training, evaluation and "
               "verification tools"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir = "run", checkpoint, image_path,
              out_prefix = "infer", csv_out, scope = "all";
  std::vector<std::string> sets;
  long seed = -1;
  bool no_median = false;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--config", config_path, "key=value config file");
    c->add_option("--set", sets, "override a config key, e.g. --set lr=1e-4")
        ->take_all();
    c->add_option("--seed", seed, "override the config seed");
  };

  CLI::App* train = app.add_subcommand("train", "train on a sequence directory");
  add_common(train);
  train->add_option("--data", data_dir, "sequence directory")->required();
  train->add_option("--out", out_dir, "output directory");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--data", data_dir, "sequence directory with depth")->required();
  eval->add_option("--csv", csv_out, "also write the metrics CSV here");
  eval->add_flag("--no-median-scaling", no_median);

  CLI::App* infer = app.add_subcommand("infer", "predict depth for one image");
  add_common(infer);
  infer->add_option("--checkpoint", checkpoint)->required();
  infer->add_option("--image", image_path, "input PPM")->required();
  infer->add_option("--out-prefix", out_prefix);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic sequence");
  add_common(synth);
  synth->add_option("--out", out_dir, "output directory")->required();

  CLI::App* gc = app.add_subcommand("gradcheck", "run the verification suites");
  gc->add_option("--scope", scope)
      ->check(CLI::IsMember({"ops", "lka", "upsampler", "geometry", "full", "all"}));

  CLI11_PARSE(app, argc, argv);
  (void)thread_cap();

  try {
    if (gc->parsed()) return cmd_gradcheck(scope);
    RunConfig cfg = resolve_config(config_path, sets, seed);
    if (train->parsed()) return cmd_train(cfg, data_dir, out_dir);
    if (eval->parsed())
      return cmd_eval(cfg, checkpoint, data_dir, !no_median, csv_out);
    if (infer->parsed()) return cmd_infer(cfg, checkpoint, image_path, out_prefix);
    if (synth->parsed()) return cmd_synth(cfg, out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
