#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "error.hpp"
#include "parse.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"
#include "verify.hpp"

using namespace bax;

namespace {

ParseOptions task_parse_options(const synth::SyntheticTask& task) {
  ParseOptions options;
  options.target_rate_hz = 1.0 / task.demo.dt;
  options.workspace = task.spec.workspace;
  return options;
}

}  // namespace

TEST_CASE("built-in tasks construct and self-validate") {
  const auto ids = synth::task_ids();
  REQUIRE(ids.size() >= 2);
  for (const auto& id : ids) {
    const auto& task = synth::get_task(id);
    task.demo.validate();
    CHECK(task.demo.length() >= 10);
    CHECK(validate_template(task.tmpl).empty());
    CHECK(task.config.num_objects() == task.tmpl.num_objects);
    // The scripted demo satisfies its own success predicate as recorded.
    CHECK(synth::evaluate_success(task, task.demo.states.back()));
  }
  CHECK_THROWS_AS(synth::get_task("no-such-task"), Error);
}

TEST_CASE("demo grounds cleanly for every task") {
  for (const auto& id : synth::task_ids()) {
    const auto& task = synth::get_task(id);
    const auto timeline =
        ground::ground_segments(task.demo, task.tmpl, task.config, task.eps_skill, task.eps_sync);
    timeline.validate();
    CHECK(timeline.length == static_cast<int>(task.demo.length()));
  }
}

TEST_CASE("noiseless bundle parses back to the ground truth") {
  for (const auto& id : synth::task_ids()) {
    const auto& task = synth::get_task(id);
    synth::BundleOptions options;
    const DemoBundle bundle = synth::render_bundle(task, options);
    bundle.validate();

    const StateActionTrajectory parsed = parse::parse_demo(bundle, task_parse_options(task));
    REQUIRE(parsed.length() == task.demo.length());
    double worst_pos = 0.0, worst_rot = 0.0, worst_kp = 0.0;
    for (std::size_t t = 0; t < parsed.length(); ++t) {
      for (int arm = 0; arm < 2; ++arm) {
        worst_pos = std::max(worst_pos, testutil::pose_translation_gap(parsed.actions[t][arm].pose,
                                                                       task.demo.actions[t][arm].pose));
        worst_rot = std::max(worst_rot, testutil::pose_rotation_gap(parsed.actions[t][arm].pose,
                                                                    task.demo.actions[t][arm].pose));
        CHECK(parsed.actions[t][arm].gripper == task.demo.actions[t][arm].gripper);
        CHECK(geo::is_rotation(parsed.actions[t][arm].pose.rotation));
      }
      for (std::size_t k = 0; k < parsed.num_keypoints(); ++k) {
        worst_kp = std::max(worst_kp, (parsed.states[t][k] - task.demo.states[t][k]).norm());
      }
    }
    INFO("task ", id, " pos ", worst_pos, " rot ", worst_rot, " kp ", worst_kp);
    CHECK(worst_pos < 1e-6);
    CHECK(worst_rot < 1e-6);
    CHECK(worst_kp < 1e-6);
  }
}

TEST_CASE("5 mm depth noise parses within a centimetre") {
  const auto& task = synth::get_task("pour");
  synth::BundleOptions options;
  options.depth_noise = 0.005;
  options.seed = 99;
  const DemoBundle bundle = synth::render_bundle(task, options);
  const StateActionTrajectory parsed = parse::parse_demo(bundle, task_parse_options(task));
  REQUIRE(parsed.length() == task.demo.length());
  double worst_kp = 0.0;
  for (std::size_t t = 0; t < parsed.length(); ++t) {
    for (std::size_t k = 0; k < parsed.num_keypoints(); ++k) {
      worst_kp = std::max(worst_kp, (parsed.states[t][k] - task.demo.states[t][k]).norm());
    }
  }
  INFO("worst keypoint error ", worst_kp);
  CHECK(worst_kp < 0.01);
}

TEST_CASE("bundle directory round trip is bit-exact") {
  const auto& task = synth::get_task("handover");
  const auto dir = std::filesystem::temp_directory_path() / "bax_bundle_rt";
  std::filesystem::remove_all(dir);
  synth::generate_bundle_dir("handover", 0.0, 5, dir.string());

  const DemoBundle loaded = load_bundle(dir.string());
  loaded.validate();
  const synth::BundleOptions options{30.0, 0.0, 5};
  const DemoBundle direct = synth::render_bundle(task, options);
  REQUIRE(loaded.frame_count() == direct.frame_count());
  REQUIRE(loaded.tracks.size() == direct.tracks.size());
  // Depth survives the f32 file format exactly.
  for (std::size_t t = 0; t < loaded.frame_count(); ++t) {
    CHECK(loaded.depth[t] == direct.depth[t]);
  }

  // The companion files exist and load.
  const TaskTemplate tmpl = load_template((dir / "template.json").string());
  CHECK(tmpl.num_objects == 1);
  const StateActionTrajectory gt = load_trajectory((dir / "gt_traj.json").string());
  CHECK(gt.length() == task.demo.length());
  const AugmentationSpec spec = load_augmentation_spec((dir / "spec.json").string());
  CHECK(spec.velocity == task.spec.velocity);
  const auto mask = load_mask_png((dir / "masks" / "object_1.png").string());
  CHECK(mask.width == loaded.camera.width);

  // Masked first-frame depth yields an object frame near the rod centroid.
  const auto config = object_frames_from_masks({mask}, loaded.depth[0], loaded.camera, gt.keypoints);
  CHECK((config.frames[0].translation - task.config.frames[0].translation).norm() < 0.08);
  std::filesystem::remove_all(dir);
}

TEST_CASE("missing hands on one arm surface as an error naming the arm") {
  const auto& task = synth::get_task("pour");
  synth::BundleOptions options;
  DemoBundle bundle = synth::render_bundle(task, options);
  for (auto& h : bundle.hands[1]) h.valid = false;
  try {
    parse::parse_demo(bundle, task_parse_options(task));
    FAIL("expected missing_hand");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_hand);
    CHECK(std::string(e.what()).find("arm 1") != std::string::npos);
  }
}

TEST_CASE("noisy sensor data still drives the whole pipeline") {
  // Depth noise perturbs the parsed demo by millimetres; grounding, the
  // invariant suite, and the replay oracle must all absorb that.
  for (const auto& id : synth::task_ids()) {
    const auto& task = synth::get_task(id);
    synth::BundleOptions render_options;
    render_options.depth_noise = 0.003;
    render_options.seed = 12345;
    const DemoBundle bundle = synth::render_bundle(task, render_options);
    const StateActionTrajectory parsed = parse::parse_demo(bundle, task_parse_options(task));

    const auto timeline =
        ground::ground_segments(parsed, task.tmpl, task.config, task.eps_skill, task.eps_sync);
    timeline.validate();

    AugmentationSpec spec = task.spec;
    spec.count = 50;
    spec.seed = 606;
    const auto result = aug::generate_dataset(parsed, task.tmpl, timeline, task.config, spec, 2);
    REQUIRE(result.demos.size() == 50);

    const auto report = verify::check_dataset(result.demos, parsed, task.config, spec, 2);
    if (!report.failures.empty()) {
      INFO("task ", id, " first failure: ", report.failures.front().second.to_text());
    }
    CHECK(report.all_passed());

    const auto stats = verify::replay_dataset(result.demos, task, task.grasp_eps, 2);
    INFO("task ", id, " noisy replay rate ", stats.rate());
    CHECK(stats.rate() >= 0.99);
  }
}

TEST_CASE("parse_demo is deterministic") {
  const auto& task = synth::get_task("pour");
  synth::BundleOptions options;
  options.depth_noise = 0.003;
  const DemoBundle bundle = synth::render_bundle(task, options);
  const auto a = parse::parse_demo(bundle, task_parse_options(task));
  const auto b = parse::parse_demo(bundle, task_parse_options(task));
  CHECK(trajectory_hash(a) == trajectory_hash(b));
}
