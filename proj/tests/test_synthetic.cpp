#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "lkad/losses.hpp"
#include "lkad/synthetic.hpp"

using namespace lkad;

TEST_CASE("render is deterministic and bounded") {
  SceneSpec scene = default_scene(48, 32, 4);
  auto [img1, dep1] = render(scene, 1);
  auto [img2, dep2] = render(scene, 1);
  for (long i = 0; i < img1.numel(); ++i) CHECK(img1.data()[i] == img2.data()[i]);
  for (long i = 0; i < dep1.numel(); ++i) {
    CHECK(dep1.data()[i] == dep2.data()[i]);
    CHECK(dep1.data()[i] > 0.0);
    CHECK(dep1.data()[i] <= scene.far_plane);
  }
  for (long i = 0; i < img1.numel(); ++i) {
    CHECK(img1.data()[i] >= 0.0);
    CHECK(img1.data()[i] <= 1.0);
  }
  CHECK_THROWS_AS(render(scene, 4), std::invalid_argument);
}

TEST_CASE("boxes occlude the ground plane") {
  SceneSpec scene = default_scene(64, 48, 3);
  auto [img, dep] = render(scene, 0);
  SceneSpec no_boxes = scene;
  no_boxes.boxes.clear();
  auto [img2, dep2] = render(no_boxes, 0);
  long nearer = 0;
  for (long i = 0; i < dep.numel(); ++i) {
    CHECK(dep.data()[i] <= dep2.data()[i] + 1e-12);
    if (dep.data()[i] < dep2.data()[i] - 1e-9) ++nearer;
  }
  CHECK(nearer > 0);  // the boxes are actually visible
}

TEST_CASE("ground-truth warp closes the loop between frames") {
  // Warping frame k+1 onto frame k with true depth and true relative pose
  // must reproduce frame k up to interpolation error.
  SceneSpec scene = default_scene(96, 64, 3);
  auto [f0, d0] = render(scene, 0);
  auto [f1, d1] = render(scene, 1);
  // camera-to-world poses: points_cam1 = T1^-1 * T0 * points_cam0
  RigidTransform rel = scene.trajectory[1].inverse().compose(scene.trajectory[0]);
  Tensor points = backproject(d0, scene.cam);
  SampleGrid grid = project(points, scene.cam, rel);
  Tensor warped = warp(f1, grid);
  real err = 0;
  for (long i = 0; i < warped.numel(); ++i)
    err += std::abs(warped.data()[i] - f0.data()[i]);
  err /= warped.numel();
  CHECK(err < 1e-2);
}

TEST_CASE("sequence directory round trip") {
  namespace fs = std::filesystem;
  const std::string dir = "test_seq_tmp";
  SceneSpec scene = default_scene(32, 32, 3);
  make_sequence(scene, dir);
  Sequence seq = load_sequence(dir);
  REQUIRE(seq.frames.size() == 3);
  REQUIRE(seq.depths.size() == 3);
  REQUIRE(seq.poses.size() == 3);
  CHECK(seq.cam.width == 32);
  auto [img, dep] = render(scene, 2);
  // Depth files are lossless; images go through 8-bit quantization.
  for (long i = 0; i < dep.numel(); ++i)
    CHECK(seq.depths[2].data()[i] == dep.data()[i]);
  for (long i = 0; i < img.numel(); ++i)
    CHECK(seq.frames[2].data()[i] == Catch::Approx(img.data()[i]).margin(0.5 / 255));
  for (int i = 0; i < 9; ++i)
    CHECK(seq.poses[1].rotation[i] == scene.trajectory[1].rotation[i]);
  fs::remove_all(dir);
}

TEST_CASE("regenerating a sequence with the same seed is byte-identical") {
  namespace fs = std::filesystem;
  SceneSpec scene = default_scene(32, 32, 3);
  scene.noise_sigma = 0.01;  // exercise the noise path too
  make_sequence(scene, "test_seq_a");
  make_sequence(scene, "test_seq_b");
  for (const auto& entry : fs::directory_iterator("test_seq_a")) {
    std::ifstream a(entry.path(), std::ios::binary);
    std::ifstream b("test_seq_b/" + entry.path().filename().string(),
                    std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    INFO(entry.path().filename().string());
    CHECK(sa == sb);
  }
  fs::remove_all("test_seq_a");
  fs::remove_all("test_seq_b");
}

TEST_CASE("spec validation") {
  SceneSpec scene = default_scene(32, 32, 2);  // too few frames
  CHECK_THROWS_AS(scene.validate(), std::invalid_argument);
}
