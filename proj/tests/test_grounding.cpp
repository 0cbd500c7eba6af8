#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "error.hpp"
#include "grounding.hpp"
#include "test_util.hpp"

using namespace bax;
using namespace bax::ground;

namespace {

TaskTemplate pour_template() {
  // Two objects; async grasp-grasp stage, then a synchronized pour referenced
  // to the receiving object.
  TaskTemplate tmpl;
  tmpl.num_objects = 2;
  TemplateStage grasp;
  grasp.sync = false;
  grasp.actions.push_back({0, {ContactToken{true, 0}, ContactToken{false, 1}}, 1});
  grasp.actions.push_back({1, {ContactToken{true, 1}, ContactToken{false, 2}}, 2});
  TemplateStage pour;
  pour.sync = true;
  pour.actions.push_back({std::nullopt, {ContactToken{false, 1}, ContactToken{false, 2}}, 2});
  tmpl.stages = {grasp, pour};
  return tmpl;
}

// Demo with one object, distances scripted so the grounded timeline is
// [motion 0-49, skill 50-80, motion 81-99, sync 100-120] for arm 0.
StateActionTrajectory scripted_demo(const geo::Vec3& center) {
  StateActionTrajectory traj;
  traj.dt = 0.1;
  traj.keypoints = {{"kp0", "body", 0, 1}, {"kp1", "top", 1, 1}};
  const int length = 121;
  for (int t = 0; t < length; ++t) {
    double dist0;
    if (t <= 49) dist0 = 0.30 - (0.30 - 0.101) * t / 49.0;
    else if (t <= 80) dist0 = 0.05;
    else dist0 = 0.15;
    const double dee = (t < 100) ? 0.5 : 0.2;

    BimanualAction action;
    action[0].pose.translation = center + geo::Vec3(dist0, 0, 0);
    action[1].pose.translation = action[0].pose.translation + geo::Vec3(0, dee, 0);
    action[0].gripper = (t >= 60) ? 1.0 : 0.0;
    action[1].gripper = 0.0;
    traj.actions.push_back(action);
    traj.states.push_back({center, center + geo::Vec3(0, 0, 0.05)});
  }
  return traj;
}

TaskTemplate one_object_template() {
  TaskTemplate tmpl;
  tmpl.num_objects = 1;
  TemplateStage grasp;
  grasp.sync = false;
  grasp.actions.push_back({0, {ContactToken{true, 0}, ContactToken{false, 1}}, 1});
  TemplateStage hold;
  hold.sync = true;
  hold.actions.push_back({std::nullopt, {ContactToken{true, 0}, ContactToken{true, 1}}, 0});
  tmpl.stages = {grasp, hold};
  return tmpl;
}

}  // namespace

TEST_CASE("pour template validates cleanly") {
  CHECK(validate_template(pour_template()).empty());
}

TEST_CASE("template with out-of-range reference is reported") {
  TaskTemplate tmpl = pour_template();
  tmpl.stages[0].actions[0].ref = 5;
  const auto issues = validate_template(tmpl);
  REQUIRE_FALSE(issues.empty());
  CHECK(issues.front().find("reference out of range") != std::string::npos);
}

TEST_CASE("template with two actions on one arm is reported") {
  TaskTemplate tmpl = pour_template();
  tmpl.stages[0].actions[1].arm = 0;
  const auto issues = validate_template(tmpl);
  REQUIRE_FALSE(issues.empty());
}

TEST_CASE("template json round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "bax_tmpl_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "template.json").string();
  save_template(pour_template(), path);
  const TaskTemplate back = load_template(path);
  CHECK(back.num_objects == 2);
  REQUIRE(back.stages.size() == 2);
  CHECK(back.stages[0].actions[0].contact[1].index == 1);
  CHECK(back.stages[1].sync);
  CHECK_FALSE(back.stages[1].actions[0].arm.has_value());
}

TEST_CASE("mask centroid at the principal point") {
  CameraModel cam;
  cam.fx = cam.fy = 600.0;
  cam.cx = 320.0;
  cam.cy = 240.0;
  cam.width = 640;
  cam.height = 480;

  MaskImage mask;
  mask.width = 640;
  mask.height = 480;
  mask.pixels.assign(640 * 480, 0);
  for (int dy = -2; dy <= 2; ++dy)
    for (int dx = -2; dx <= 2; ++dx) mask.pixels[(240 + dy) * 640 + (320 + dx)] = 255;

  std::vector<float> depth(640 * 480, 1.0f);
  const std::vector<KeypointMeta> kps = {{"kp", "", 0, 1}};
  const auto config = object_frames_from_masks({mask}, depth, cam, kps);
  REQUIRE(config.num_objects() == 1);
  CHECK((config.frames[0].translation - geo::Vec3(0, 0, 1.0)).norm() < 1e-6);
  CHECK(config.owned[0] == std::vector<int>{0});
}

TEST_CASE("mask centroid shrugs off depth outliers") {
  CameraModel cam;
  cam.fx = cam.fy = 600.0;
  cam.cx = 320.0;
  cam.cy = 240.0;
  cam.width = 640;
  cam.height = 480;

  MaskImage mask;
  mask.width = 640;
  mask.height = 480;
  mask.pixels.assign(640 * 480, 0);
  std::vector<float> depth(640 * 480, 0.0f);
  Rng rng(3);
  int count = 0;
  for (int dy = -5; dy <= 5; ++dy) {
    for (int dx = -5; dx <= 5; ++dx) {
      const int x = 320 + dx, y = 240 + dy;
      mask.pixels[y * 640 + x] = 1;
      depth[y * 640 + x] = (count++ % 10 == 9) ? 10.0f : 0.5f;  // 10% far outliers
    }
  }
  const auto config = object_frames_from_masks({mask}, depth, cam, {});
  CHECK(std::abs(config.frames[0].translation.z() - 0.5) < 0.005);
}

TEST_CASE("empty mask raises EmptyMask") {
  CameraModel cam;
  cam.fx = cam.fy = 600.0;
  cam.cx = 320.0;
  cam.cy = 240.0;
  cam.width = 640;
  cam.height = 480;
  MaskImage mask;
  mask.width = 640;
  mask.height = 480;
  mask.pixels.assign(640 * 480, 0);
  std::vector<float> depth(640 * 480, 1.0f);
  try {
    object_frames_from_masks({mask}, depth, cam, {});
    FAIL("expected EmptyMask");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_mask);
  }
}

TEST_CASE("mask png round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "bax_mask_test";
  std::filesystem::create_directories(dir);
  MaskImage mask;
  mask.width = 32;
  mask.height = 16;
  mask.pixels.assign(32 * 16, 0);
  for (int i = 100; i < 200; ++i) mask.pixels[i] = 255;
  const std::string path = (dir / "object_1.png").string();
  save_mask_png(mask, path);
  const MaskImage back = load_mask_png(path);
  CHECK(back.width == 32);
  CHECK(back.height == 16);
  CHECK(back.pixels == mask.pixels);
}

TEST_CASE("scripted demo grounds to the expected timeline") {
  const geo::Vec3 center(0.4, -0.2, 0.1);
  const StateActionTrajectory traj = scripted_demo(center);
  ObjectConfiguration config;
  config.frames.push_back({geo::Mat3::Identity(), center});
  config.owned = ownership_from_metadata(traj.keypoints, 1);

  const SegmentTimeline timeline = ground_segments(traj, one_object_template(), config, 0.10, 0.30);
  timeline.validate();

  const auto& arm0 = timeline.arms[0];
  REQUIRE(arm0.size() == 4);
  CHECK(arm0[0].kind == SegmentKind::motion);
  CHECK(arm0[0].begin == 0);
  CHECK(arm0[0].end == 50);
  CHECK(arm0[1].kind == SegmentKind::skill_async);
  CHECK(arm0[1].begin == 50);
  CHECK(arm0[1].end == 81);
  CHECK(arm0[1].ref == 1);
  CHECK(arm0[2].kind == SegmentKind::motion);
  CHECK(arm0[2].begin == 81);
  CHECK(arm0[2].end == 100);
  CHECK(arm0[3].kind == SegmentKind::skill_sync);
  CHECK(arm0[3].begin == 100);
  CHECK(arm0[3].end == 121);

  // Peer arm idles while arm 0 works the object.
  const auto& arm1 = timeline.arms[1];
  REQUIRE(arm1.size() == 4);
  CHECK(arm1[1].kind == SegmentKind::idle);
  CHECK(arm1[1].begin == 50);
  CHECK(arm1[1].end == 81);

  // Grasp at frame 60 attached to object 1.
  REQUIRE(timeline.events.arms[0].size() == 1);
  CHECK(timeline.events.arms[0][0].t == 60);
  CHECK(timeline.events.arms[0][0].grasp);
  CHECK(timeline.events.arms[0][0].object == 1);
  CHECK(timeline.events.arms[1].empty());
}

TEST_CASE("grounding fails when the EE never reaches the object") {
  const geo::Vec3 center(0.4, -0.2, 0.1);
  StateActionTrajectory traj = scripted_demo(center);
  ObjectConfiguration config;
  config.frames.push_back({geo::Mat3::Identity(), center + geo::Vec3(5, 0, 0)});
  config.owned = ownership_from_metadata(traj.keypoints, 1);
  try {
    ground_segments(traj, one_object_template(), config, 0.10, 0.30);
    FAIL("expected NoSkillSegment");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::no_skill_segment);
  }
}

TEST_CASE("grounding is invariant under a rigid transform of the scene") {
  const geo::Vec3 center(0.4, -0.2, 0.1);
  const StateActionTrajectory traj = scripted_demo(center);
  ObjectConfiguration config;
  config.frames.push_back({geo::Mat3::Identity(), center});
  config.owned = ownership_from_metadata(traj.keypoints, 1);
  const SegmentTimeline base = ground_segments(traj, one_object_template(), config, 0.10, 0.30);

  Rng rng(77);
  const geo::Pose rigid = testutil::random_pose(rng, 0.5);
  StateActionTrajectory moved = traj;
  for (auto& frame : moved.states)
    for (auto& p : frame) p = geo::apply(rigid, p);
  for (auto& action : moved.actions)
    for (int arm = 0; arm < 2; ++arm) action[arm].pose = geo::compose(rigid, action[arm].pose);
  ObjectConfiguration moved_config = config;
  moved_config.frames[0] = geo::compose(rigid, config.frames[0]);

  const SegmentTimeline shifted = ground_segments(moved, one_object_template(), moved_config, 0.10, 0.30);
  for (int arm = 0; arm < 2; ++arm) {
    REQUIRE(shifted.arms[arm].size() == base.arms[arm].size());
    for (std::size_t s = 0; s < base.arms[arm].size(); ++s) {
      CHECK(shifted.arms[arm][s].begin == base.arms[arm][s].begin);
      CHECK(shifted.arms[arm][s].end == base.arms[arm][s].end);
      CHECK(shifted.arms[arm][s].kind == base.arms[arm][s].kind);
    }
  }
}

TEST_CASE("mirroring is an involution and swaps the event log arms") {
  const geo::Vec3 center(0.4, -0.2, 0.1);
  const StateActionTrajectory traj = scripted_demo(center);
  ObjectConfiguration config;
  config.frames.push_back({geo::Mat3::Identity(), center});
  config.owned = ownership_from_metadata(traj.keypoints, 1);
  const geo::Plane plane{geo::Vec3(0, 1, 0), 0.0};

  const auto mirrored = mirror_template_inputs(traj, config, one_object_template(), plane);
  const auto back = mirror_template_inputs(mirrored.traj, mirrored.config, mirrored.tmpl, plane);
  for (std::size_t t = 0; t < traj.length(); ++t) {
    for (int arm = 0; arm < 2; ++arm) {
      CHECK(testutil::pose_translation_gap(back.traj.actions[t][arm].pose, traj.actions[t][arm].pose) < 1e-12);
      CHECK(testutil::pose_rotation_gap(back.traj.actions[t][arm].pose, traj.actions[t][arm].pose) < 1e-12);
      CHECK(back.traj.actions[t][arm].gripper == traj.actions[t][arm].gripper);
    }
    for (std::size_t k = 0; k < traj.num_keypoints(); ++k) {
      CHECK((back.traj.states[t][k] - traj.states[t][k]).norm() < 1e-12);
    }
  }

  // Reflection moves the object across the symmetry plane.
  CHECK((mirrored.config.frames[0].translation - geo::Vec3(0.4, 0.2, 0.1)).norm() < 1e-12);

  // Grounding the mirrored inputs swaps the arms' event logs, timestamps intact.
  const SegmentTimeline base = ground_segments(traj, one_object_template(), config, 0.10, 0.30);
  const SegmentTimeline swapped = ground_segments(mirrored.traj, mirrored.tmpl.num_objects == 1
                                                                     ? mirrored.tmpl
                                                                     : mirrored.tmpl,
                                                  mirrored.config, 0.10, 0.30);
  REQUIRE(swapped.events.arms[1].size() == base.events.arms[0].size());
  for (std::size_t i = 0; i < base.events.arms[0].size(); ++i) {
    CHECK(swapped.events.arms[1][i].t == base.events.arms[0][i].t);
    CHECK(swapped.events.arms[1][i].grasp == base.events.arms[0][i].grasp);
    CHECK(swapped.events.arms[1][i].object == base.events.arms[0][i].object);
  }
  CHECK(swapped.events.arms[0].size() == base.events.arms[1].size());

  // Segment intervals swap arms one-for-one.
  for (int arm = 0; arm < 2; ++arm) {
    REQUIRE(swapped.arms[arm].size() == base.arms[1 - arm].size());
    for (std::size_t s = 0; s < base.arms[1 - arm].size(); ++s) {
      CHECK(swapped.arms[arm][s].begin == base.arms[1 - arm][s].begin);
      CHECK(swapped.arms[arm][s].end == base.arms[1 - arm][s].end);
      CHECK(swapped.arms[arm][s].kind == base.arms[1 - arm][s].kind);
    }
  }
}

TEST_CASE("reflecting a point across the YZ plane flips x") {
  const geo::Plane yz{geo::Vec3(1, 0, 0), 0.0};
  CHECK((geo::reflect_point(geo::Vec3(0.3, 0.2, 0.0), yz) - geo::Vec3(-0.3, 0.2, 0.0)).norm() < 1e-15);
}

TEST_CASE("timeline json round trip") {
  const geo::Vec3 center(0.4, -0.2, 0.1);
  const StateActionTrajectory traj = scripted_demo(center);
  ObjectConfiguration config;
  config.frames.push_back({geo::Mat3::Identity(), center});
  config.owned = ownership_from_metadata(traj.keypoints, 1);
  const SegmentTimeline timeline = ground_segments(traj, one_object_template(), config, 0.10, 0.30);

  const auto dir = std::filesystem::temp_directory_path() / "bax_timeline_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "timeline.json").string();
  save_timeline(timeline, path);
  const SegmentTimeline back = load_timeline(path);
  CHECK(back.length == timeline.length);
  for (int arm = 0; arm < 2; ++arm) {
    REQUIRE(back.arms[arm].size() == timeline.arms[arm].size());
    REQUIRE(back.events.arms[arm].size() == timeline.events.arms[arm].size());
  }
}
