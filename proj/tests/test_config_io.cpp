#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "lkad/checks.hpp"
#include "lkad/config.hpp"
#include "lkad/io.hpp"
#include "lkad/optim.hpp"
#include "lkad/trainer.hpp"

using namespace lkad;

TEST_CASE("lkdt tensor file round trip") {
  NormalSampler rng(81);
  Tensor t = checks::randn(rng, {2, 3, 4});
  save_lkdt("test_tensor.lkdt", t);
  Tensor back = load_lkdt("test_tensor.lkdt");
  REQUIRE(back.shape() == t.shape());
  for (long i = 0; i < t.numel(); ++i) CHECK(back.data()[i] == t.data()[i]);
  std::remove("test_tensor.lkdt");
  CHECK_THROWS_AS(load_lkdt("no_such_file.lkdt"), std::runtime_error);
}

TEST_CASE("ppm round trip quantizes to 8 bits") {
  Tensor img = Tensor::zeros({3, 2, 2});
  for (long i = 0; i < img.numel(); ++i) img.data()[i] = i / 11.0;
  save_ppm("test_img.ppm", img);
  Tensor back = load_ppm("test_img.ppm");
  REQUIRE(back.shape() == img.shape());
  for (long i = 0; i < img.numel(); ++i)
    CHECK(back.data()[i] == Catch::Approx(img.data()[i]).margin(0.5 / 255));
  std::remove("test_img.ppm");
}

TEST_CASE("config file parsing, overrides, and validation") {
  {
    std::ofstream f("test_cfg.txt");
    f << "# comment line\n"
      << "width=320\n"
      << "height = 96\n"
      << "lr=5e-4   # trailing comment\n"
      << "channels=8,16,24,32\n"
      << "use_lka=off\n";
  }
  RunConfig cfg = load_config("test_cfg.txt");
  CHECK(cfg.width == 320);
  CHECK(cfg.height == 96);
  CHECK(cfg.lr == 5e-4);
  CHECK(cfg.channels == std::vector<int>{8, 16, 24, 32});
  CHECK_FALSE(cfg.use_lka);
  cfg.set("use_lka", "1");
  CHECK(cfg.use_lka);
  CHECK_THROWS_AS(cfg.set("no_such_key", "1"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.set("use_lka", "maybe"), std::invalid_argument);
  cfg.set("width", "100");  // not divisible by 16
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  std::remove("test_cfg.txt");
}

TEST_CASE("config invariants") {
  RunConfig cfg;
  cfg.validate();
  RunConfig bad = cfg;
  bad.lr_final = bad.lr * 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.channels = {8, 16};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("canonical dump and hashes are stable") {
  RunConfig a, b;
  CHECK(a.canonical() == b.canonical());
  CHECK(a.config_hash() == b.config_hash());
  b.seed = 99;
  CHECK(a.config_hash() != b.config_hash());
  // seed is not architectural
  CHECK(a.model_signature() == b.model_signature());
  b.use_lka = false;
  const std::string diff = signature_mismatch(b.model_signature(),
                                              a.model_signature());
  CHECK(diff.find("use_lka") != std::string::npos);
  CHECK(signature_mismatch(a.model_signature(), a.model_signature()).empty());
}

TEST_CASE("checkpoint round trip and mismatch reporting") {
  NormalSampler rng(82);
  ParamStore store;
  store.add("alpha", checks::randn(rng, {2, 3}));
  store.add("beta", checks::randn(rng, {4}));
  save_checkpoint("test_ck.lkck", store, "sig-1");
  Checkpoint ck = load_checkpoint("test_ck.lkck");
  CHECK(ck.config_hash == "sig-1");
  ParamStore fresh;
  fresh.add("alpha", Tensor::zeros({2, 3}));
  fresh.add("beta", Tensor::zeros({4}));
  restore_params(fresh, ck);
  for (long i = 0; i < 6; ++i)
    CHECK(fresh.items[0].second.data()[i] == store.items[0].second.data()[i]);

  ParamStore wrong_shape;
  wrong_shape.add("alpha", Tensor::zeros({3, 2}));
  wrong_shape.add("beta", Tensor::zeros({4}));
  CHECK_THROWS_WITH(restore_params(wrong_shape, ck),
                    Catch::Matchers::ContainsSubstring("alpha"));

  ParamStore wrong_name;
  wrong_name.add("alpha", Tensor::zeros({2, 3}));
  wrong_name.add("gamma", Tensor::zeros({4}));
  CHECK_THROWS_WITH(restore_params(wrong_name, ck),
                    Catch::Matchers::ContainsSubstring("gamma"));
  std::remove("test_ck.lkck");
}

TEST_CASE("adam takes a descent step on a quadratic") {
  ParamStore store;
  Tensor x = store.add("x", Tensor::from_data({2}, {3.0, -2.0}));
  std::vector<ParamStore*> stores{&store};
  Adam opt;
  real prev = 13.0;
  for (int it = 0; it < 200; ++it) {
    store.zero_grads();
    Tape tape;
    Tensor loss = sum(x * x);
    tape.backward(loss);
    opt.step(stores, 0.05);
    CHECK(std::isfinite(loss.value()));
    prev = loss.value();
  }
  CHECK(prev < 0.05);
}

TEST_CASE("lr schedule steps down after the decay epoch") {
  CHECK(lr_at_epoch(0, 1e-4, 1e-5, 15) == 1e-4);
  CHECK(lr_at_epoch(14, 1e-4, 1e-5, 15) == 1e-4);
  CHECK(lr_at_epoch(15, 1e-4, 1e-5, 15) == 1e-5);
  CHECK(lr_at_epoch(19, 1e-4, 1e-5, 15) == 1e-5);
}

TEST_CASE("one smoke epoch trains, checkpoints, and evaluates") {
  namespace fs = std::filesystem;
  const std::string data = "test_train_seq", out = "test_train_out";
  RunConfig cfg;
  cfg.width = 48;
  cfg.height = 32;
  cfg.epochs = 1;
  cfg.batch = 2;
  cfg.frames = 5;
  cfg.channels = {4, 6, 8, 10};
  cfg.seed = 3;
  SceneSpec scene = default_scene(cfg.width, cfg.height, cfg.frames);
  make_sequence(scene, data);
  Sequence seq = load_sequence(data);
  DepthNet depth_net = DepthNet::build(make_depth_config(cfg), cfg.seed);
  PoseNet pose_net = PoseNet::build(cfg.seed + 1, {4, 6, 8, 10, 12});
  TrainResult res = train(cfg, seq, depth_net, pose_net, out, false);
  CHECK(res.steps == 2);  // 3 targets, batch 2
  CHECK(fs::exists(out + "/loss_log.csv"));
  CHECK(fs::exists(out + "/checkpoint_ep001.lkck"));
  CHECK(fs::exists(res.final_checkpoint));

  // Restoring into fresh nets reproduces predictions exactly.
  DepthNet depth2 = DepthNet::build(make_depth_config(cfg), cfg.seed);
  PoseNet pose2 = PoseNet::build(cfg.seed + 1, {4, 6, 8, 10, 12});
  load_model(res.final_checkpoint, depth2, pose2, cfg.model_signature());
  Tensor p1 = predict_depth(depth_net, seq.frames[0]);
  Tensor p2 = predict_depth(depth2, seq.frames[0]);
  for (long i = 0; i < p1.numel(); ++i) CHECK(p1.data()[i] == p2.data()[i]);

  // Signature mismatch names the differing field.
  RunConfig other = cfg;
  other.use_lka = false;
  DepthNet depth3 = DepthNet::build(make_depth_config(other), cfg.seed);
  CHECK_THROWS_WITH(
      load_model(res.final_checkpoint, depth3, pose2, other.model_signature()),
      Catch::Matchers::ContainsSubstring("use_lka"));

  std::vector<MetricsReport> reports = evaluate(depth_net, seq);
  REQUIRE(reports.size() == seq.frames.size() + 1);
  CHECK(reports.back().n_pixels > 0);
  fs::remove_all(data);
  fs::remove_all(out);
}
