#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>

#include "error.hpp"
#include "json_io.hpp"
#include "parse.hpp"

namespace bax::synth {

namespace fs = std::filesystem;

namespace {

const double kVelocity = 0.4;  // m/s
const double kDt = 0.1;        // s

geo::Mat3 downward_grip() {
  // Approach straight down, closing axis along task y.
  geo::Mat3 r;
  r.col(0) = geo::Vec3(0, 1, 0);
  r.col(2) = geo::Vec3(0, 0, -1);
  r.col(1) = r.col(2).cross(r.col(0));
  return r;
}

ArmAction make_action(const geo::Vec3& pos, const geo::Mat3& rot, double gripper) {
  return {{rot, pos}, gripper};
}

// Linearly spaced positions from `from` (exclusive) to `to` (inclusive).
void append_line(std::vector<ArmAction>& frames, const geo::Vec3& from, const geo::Vec3& to, int steps,
                 const geo::Mat3& rot, double gripper) {
  for (int i = 1; i <= steps; ++i) {
    const double s = static_cast<double>(i) / steps;
    frames.push_back(make_action((1.0 - s) * from + s * to, rot, gripper));
  }
}

struct ArmAssembly {
  std::vector<ArmAction> stream;

  const geo::Pose& last_pose(const geo::Pose& fallback) const {
    return stream.empty() ? fallback : stream.back().pose;
  }
};

// Appends a motion to `goal` using the engine's own step-count formula and
// parameterization so identity replay stays frame-exact.
void append_motion(ArmAssembly& arm, const geo::Pose& home, const geo::Pose& goal, double gripper,
                   bool include_goal = false) {
  const bool include_start = arm.stream.empty();
  const geo::Pose start = arm.last_pose(home);
  const auto planned = aug::plan_motion_segment(start, goal, gripper, kVelocity, kDt,
                                                straight_line_planner(), include_start, -1, include_goal);
  arm.stream.insert(arm.stream.end(), planned.begin(), planned.end());
}

void append_holds(std::vector<ArmAction>& frames, int count) {
  for (int i = 0; i < count; ++i) frames.push_back(frames.back());
}

// Grasp-skill script: pregrasp above the grasp point, descend, close, lift
// back up, short hold. All frames stay within eps_skill of the object centre.
std::vector<ArmAction> grasp_script(const geo::Vec3& grasp_point, double pregrasp_z, double lift_z,
                                    const geo::Mat3& rot) {
  std::vector<ArmAction> frames;
  const geo::Vec3 pregrasp(grasp_point.x(), grasp_point.y(), pregrasp_z);
  const geo::Vec3 lifted(grasp_point.x(), grasp_point.y(), lift_z);
  frames.push_back(make_action(pregrasp, rot, 0.0));
  append_line(frames, pregrasp, grasp_point, 4, rot, 0.0);
  frames.push_back(make_action(grasp_point, rot, 1.0));  // grasp event
  frames.push_back(make_action(grasp_point, rot, 1.0));
  append_line(frames, grasp_point, lifted, 4, rot, 1.0);
  frames.push_back(make_action(lifted, rot, 1.0));
  frames.push_back(make_action(lifted, rot, 1.0));
  return frames;
}

GraspEventLog derive_events(const std::vector<BimanualAction>& actions,
                            const std::array<std::vector<int>, 2>& grasp_objects) {
  GraspEventLog log;
  for (int arm = 0; arm < 2; ++arm) {
    std::size_t next_obj = 0;
    for (std::size_t t = 1; t < actions.size(); ++t) {
      const double prev = actions[t - 1][arm].gripper;
      const double curr = actions[t][arm].gripper;
      if (curr == prev) continue;
      GraspEvent e;
      e.t = static_cast<int>(t);
      e.grasp = curr > prev;
      if (e.grasp) {
        if (next_obj >= grasp_objects[arm].size())
          fail(Errc::validation, "scripted demo has more grasps than attributions");
        e.object = grasp_objects[arm][next_obj++];
      }
      log.arms[arm].push_back(e);
    }
  }
  return log;
}

StateActionTrajectory finish_demo(std::array<ArmAssembly, 2> arms, const std::vector<KeypointMeta>& keypoints,
                                  const std::vector<geo::Vec3>& initial,
                                  const std::vector<std::vector<int>>& owned,
                                  const std::array<std::vector<int>, 2>& grasp_objects) {
  if (arms[0].stream.size() != arms[1].stream.size())
    fail(Errc::validation, "scripted demo arms ended with different lengths");
  StateActionTrajectory demo;
  demo.dt = kDt;
  demo.keypoints = keypoints;
  for (std::size_t t = 0; t < arms[0].stream.size(); ++t) {
    demo.actions.push_back({arms[0].stream[t], arms[1].stream[t]});
  }
  const GraspEventLog events = derive_events(demo.actions, grasp_objects);
  demo.states = aug::propagate_keypoints(demo.actions, events, initial, owned);
  demo.validate();
  return demo;
}

WorkspaceGeometry desk_workspace(double reach) {
  WorkspaceGeometry ws;
  ws.box_min = geo::Vec3(0.15, -0.45, 0.0);
  ws.box_max = geo::Vec3(0.80, 0.45, 0.55);
  ws.arm_base = {geo::Vec3(0.0, -0.35, 0.0), geo::Vec3(0.0, 0.35, 0.0)};
  ws.reach_radius = {reach, reach};
  return ws;
}

ObjectSampler tabletop_sampler(double x_lo, double x_hi, double y_lo, double y_hi, double yaw) {
  ObjectSampler s;
  s.translation_range = {{{x_lo, x_hi}, {y_lo, y_hi}, {0.0, 0.0}}};
  s.yaw_range = {-yaw, yaw};
  return s;
}

geo::Vec3 keypoint_mean(const std::vector<geo::Vec3>& points, const std::vector<int>& indices) {
  geo::Vec3 sum = geo::Vec3::Zero();
  for (int i : indices) sum += points[static_cast<std::size_t>(i)];
  return sum / static_cast<double>(indices.size());
}

SyntheticTask build_pour() {
  SyntheticTask task;
  task.id = "pour";

  task.tmpl.num_objects = 2;
  TemplateStage grasp_stage;
  grasp_stage.sync = false;
  grasp_stage.actions.push_back({0, {ContactToken{true, 0}, ContactToken{false, 1}}, 1});
  grasp_stage.actions.push_back({1, {ContactToken{true, 1}, ContactToken{false, 2}}, 2});
  TemplateStage pour_stage;
  pour_stage.sync = true;
  pour_stage.actions.push_back({std::nullopt, {ContactToken{false, 1}, ContactToken{false, 2}}, 2});
  task.tmpl.stages = {grasp_stage, pour_stage};

  task.keypoints = {{"bottle_base", "bottle body", 0, 1}, {"bottle_body", "bottle body", 0, 1},
                    {"bottle_tip", "bottle cap", 1, 1},   {"cup_base", "cup body", 2, 2},
                    {"cup_body", "cup body", 2, 2},       {"cup_rim", "cup rim", 3, 2}};
  task.initial_keypoints = {geo::Vec3(0.46, -0.20, 0.00), geo::Vec3(0.46, -0.20, 0.06),
                            geo::Vec3(0.46, -0.20, 0.15), geo::Vec3(0.46, 0.20, 0.00),
                            geo::Vec3(0.46, 0.20, 0.05),  geo::Vec3(0.46, 0.20, 0.09)};
  task.config.owned = ownership_from_metadata(task.keypoints, 2);
  for (int k = 0; k < 2; ++k) {
    geo::Pose frame;
    frame.translation = keypoint_mean(task.initial_keypoints, task.config.owned[k]);
    task.config.frames.push_back(frame);
  }

  task.spec.workspace = desk_workspace(0.95);
  task.spec.symmetry_plane = {geo::Vec3(0, 1, 0), 0.0};
  task.spec.object_samplers = {tabletop_sampler(-0.14, 0.12, -0.14, 0.14, 0.6),
                               tabletop_sampler(-0.14, 0.12, -0.14, 0.14, 0.6)};
  task.spec.min_separation = 0.16;
  task.spec.velocity = kVelocity;
  task.spec.dt = kDt;

  const geo::Mat3 grip = downward_grip();
  const geo::Pose home0{grip, geo::Vec3(0.28, -0.30, 0.26)};
  const geo::Pose home1{grip, geo::Vec3(0.28, 0.30, 0.26)};
  const geo::Vec3 bottle_grasp(0.46, -0.20, 0.06);
  const geo::Vec3 cup_grasp(0.46, 0.20, 0.05);

  std::vector<ArmAction> script0 = grasp_script(bottle_grasp, 0.13, 0.13, grip);
  std::vector<ArmAction> script1 = grasp_script(cup_grasp, 0.12, 0.12, grip);

  // Synchronized pour: the cup arm holds while the bottle arm tilts about the
  // world x axis until the tip points at the cup. Positions stay fixed, so
  // the inter-EE distance is constant through the segment.
  const geo::Vec3 pour_pos(0.46, 0.29, 0.24);
  const geo::Vec3 cup_hold(0.46, 0.20, 0.16);
  std::vector<ArmAction> sync0, sync1;
  const int tilt_steps = 10;
  for (int i = 0; i <= tilt_steps; ++i) {
    const double alpha = (M_PI / 2.0) * i / tilt_steps;
    const geo::Mat3 rot = Eigen::AngleAxisd(alpha, geo::Vec3::UnitX()).toRotationMatrix() * grip;
    sync0.push_back(make_action(pour_pos, rot, 1.0));
  }
  append_holds(sync0, 2);
  for (std::size_t i = 0; i < sync0.size(); ++i) sync1.push_back(make_action(cup_hold, grip, 1.0));

  // Balance the arms so neither waits before the sync stage; the slack lands
  // inside the shorter arm's in-threshold hold, keeping every grounded motion
  // interval a single uniform line.
  const geo::Pose sync0_start = sync0.front().pose;
  const geo::Pose sync1_start = sync1.front().pose;
  const auto presync = [&](const geo::Pose& home, const std::vector<ArmAction>& script,
                           const geo::Pose& sync_start) {
    const int approach = aug::motion_step_count(home, script.front().pose, kVelocity, kDt);
    const int carry = aug::motion_step_count(script.back().pose, sync_start, kVelocity, kDt);
    return approach + static_cast<int>(script.size()) + carry;
  };
  const int len0 = presync(home0, script0, sync0_start);
  const int len1 = presync(home1, script1, sync1_start);
  if (len0 > len1) append_holds(script1, len0 - len1);
  else if (len1 > len0) append_holds(script0, len1 - len0);

  std::array<ArmAssembly, 2> arms;
  append_motion(arms[0], home0, script0.front().pose, 0.0);
  arms[0].stream.insert(arms[0].stream.end(), script0.begin(), script0.end());
  append_motion(arms[0], home0, sync0_start, 1.0);
  arms[0].stream.insert(arms[0].stream.end(), sync0.begin(), sync0.end());

  append_motion(arms[1], home1, script1.front().pose, 0.0);
  arms[1].stream.insert(arms[1].stream.end(), script1.begin(), script1.end());
  append_motion(arms[1], home1, sync1_start, 1.0);
  arms[1].stream.insert(arms[1].stream.end(), sync1.begin(), sync1.end());

  task.demo = finish_demo(std::move(arms), task.keypoints, task.initial_keypoints, task.config.owned,
                          {std::vector<int>{1}, std::vector<int>{2}});

  task.success.kind = SuccessSpec::Kind::offset_and_tilt;
  task.success.marker_kp = 2;    // bottle tip
  task.success.axis_base_kp = 1; // bottle body
  task.success.target_object = 2;
  const auto& final_state = task.demo.states.back();
  const geo::Vec3 cup_centroid = keypoint_mean(final_state, task.config.owned[1]);
  task.success.offset = final_state[2] - cup_centroid;
  const geo::Vec3 axis = (final_state[2] - final_state[1]).normalized();
  task.success.tilt = std::acos(std::clamp(axis.dot(geo::Vec3::UnitZ()), -1.0, 1.0));
  return task;
}

SyntheticTask build_handover() {
  SyntheticTask task;
  task.id = "handover";

  task.tmpl.num_objects = 1;
  TemplateStage grasp_stage;
  grasp_stage.sync = false;
  grasp_stage.actions.push_back({0, {ContactToken{true, 0}, ContactToken{false, 1}}, 1});
  TemplateStage transfer_stage;
  transfer_stage.sync = true;
  transfer_stage.actions.push_back({std::nullopt, {ContactToken{true, 1}, ContactToken{false, 1}}, 0});
  TemplateStage place_stage;
  place_stage.sync = false;
  place_stage.actions.push_back({1, {ContactToken{true, 1}, ContactToken{false, 1}}, 0});
  task.tmpl.stages = {grasp_stage, transfer_stage, place_stage};

  task.keypoints = {{"rod_bottom", "rod", 0, 1}, {"rod_mid", "rod", 0, 1}, {"rod_top", "rod", 1, 1}};
  task.initial_keypoints = {geo::Vec3(0.52, -0.24, 0.00), geo::Vec3(0.52, -0.24, 0.05),
                            geo::Vec3(0.52, -0.24, 0.10)};
  task.config.owned = ownership_from_metadata(task.keypoints, 1);
  {
    geo::Pose frame;
    frame.translation = keypoint_mean(task.initial_keypoints, task.config.owned[0]);
    task.config.frames.push_back(frame);
  }

  task.spec.workspace = desk_workspace(0.75);
  task.spec.workspace.box_min = geo::Vec3(0.15, -0.55, 0.0);
  task.spec.workspace.box_max = geo::Vec3(0.80, 0.55, 0.55);
  task.spec.symmetry_plane = {geo::Vec3(0, 1, 0), 0.0};
  task.spec.object_samplers = {tabletop_sampler(-0.10, 0.08, -0.06, 0.34, 0.5)};
  task.spec.min_separation = 0.0;
  task.spec.velocity = kVelocity;
  task.spec.dt = kDt;
  task.eps_sync = 0.12;  // the hover-and-take geometry is tighter than a pour

  const geo::Mat3 grip = downward_grip();
  const geo::Pose home0{grip, geo::Vec3(0.30, -0.28, 0.30)};
  const geo::Vec3 rod_mid(0.52, -0.24, 0.05);

  std::vector<ArmAction> script0 = grasp_script(rod_mid, 0.12, 0.12, grip);

  // Transfer at a fixed task-frame point: the giver holds the rod while the
  // receiver closes on its top, then the giver releases. The receiver hovers
  // at the take pose from the start, so its pre-transfer stream is static.
  const geo::Vec3 give_pos(0.46, -0.035, 0.24);
  const geo::Vec3 take_pos(0.46, -0.035, 0.29);
  const geo::Pose home1{grip, take_pos};
  std::vector<ArmAction> sync0, sync1;
  for (int i = 0; i < 13; ++i) {
    sync0.push_back(make_action(give_pos, grip, i < 6 ? 1.0 : 0.0));  // release at frame 6
    sync1.push_back(make_action(take_pos, grip, i < 3 ? 0.0 : 1.0));  // grasp at frame 3
  }

  // Receiver's place: one straight descent to the drop pose, a single-frame
  // release, then a straight retreat. Keeping each leg a single line keeps
  // every grounded motion interval uniform.
  const geo::Vec3 place_low(0.60, 0.0, 0.105);
  const std::vector<ArmAction> place = {make_action(place_low, grip, 0.0)};  // release event frame

  const geo::Pose retreat1{grip, geo::Vec3(0.30, 0.28, 0.30)};
  const geo::Pose sync0_start{grip, give_pos};

  std::array<ArmAssembly, 2> arms;
  append_motion(arms[0], home0, script0.front().pose, 0.0);
  arms[0].stream.insert(arms[0].stream.end(), script0.begin(), script0.end());
  append_motion(arms[0], home0, sync0_start, 1.0);

  // Receiver waits at the take pose until the giver arrives.
  arms[1].stream.push_back(make_action(take_pos, grip, 0.0));
  append_holds(arms[1].stream, static_cast<int>(arms[0].stream.size()) - 1);

  arms[0].stream.insert(arms[0].stream.end(), sync0.begin(), sync0.end());
  arms[1].stream.insert(arms[1].stream.end(), sync1.begin(), sync1.end());

  // Receiver places and retreats; the giver holds its pose to the end.
  append_motion(arms[1], home1, place.front().pose, 1.0);
  arms[1].stream.insert(arms[1].stream.end(), place.begin(), place.end());
  append_motion(arms[1], home1, retreat1, 0.0, /*include_goal=*/true);
  append_holds(arms[0].stream,
               static_cast<int>(arms[1].stream.size()) - static_cast<int>(arms[0].stream.size()));

  task.demo = finish_demo(std::move(arms), task.keypoints, task.initial_keypoints, task.config.owned,
                          {std::vector<int>{1}, std::vector<int>{1}});

  task.success.kind = SuccessSpec::Kind::containment;
  task.success.contained_kp = 0;  // rod bottom
  task.success.goal_min = geo::Vec3(0.55, -0.05, -0.01);
  task.success.goal_max = geo::Vec3(0.65, 0.05, 0.03);
  return task;
}

const std::map<std::string, SyntheticTask>& task_registry() {
  static std::map<std::string, SyntheticTask> registry;
  static std::once_flag once;
  std::call_once(once, [] {
    registry.emplace("pour", build_pour());
    registry.emplace("handover", build_handover());
  });
  return registry;
}

}  // namespace

std::vector<std::string> task_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, task] : task_registry()) ids.push_back(id);
  return ids;
}

const SyntheticTask& get_task(const std::string& id) {
  const auto& registry = task_registry();
  const auto it = registry.find(id);
  if (it == registry.end()) fail(Errc::unknown_task, "unknown synthetic task '" + id + "'");
  return it->second;
}

bool evaluate_success(const SyntheticTask& task, const std::vector<geo::Vec3>& final_keypoints) {
  switch (task.success.kind) {
    case SuccessSpec::Kind::offset_and_tilt: {
      const auto& owned = task.config.owned[static_cast<std::size_t>(task.success.target_object - 1)];
      const geo::Vec3 centroid = keypoint_mean(final_keypoints, owned);
      const geo::Vec3 rel = final_keypoints[static_cast<std::size_t>(task.success.marker_kp)] - centroid;
      const geo::Vec3 mirrored = geo::reflection_matrix(task.spec.symmetry_plane) * task.success.offset;
      const double offset_err = std::min((rel - task.success.offset).norm(), (rel - mirrored).norm());
      const geo::Vec3 axis = (final_keypoints[static_cast<std::size_t>(task.success.marker_kp)] -
                              final_keypoints[static_cast<std::size_t>(task.success.axis_base_kp)])
                                 .normalized();
      const double tilt = std::acos(std::clamp(axis.dot(geo::Vec3::UnitZ()), -1.0, 1.0));
      return offset_err <= task.success.offset_tol && std::abs(tilt - task.success.tilt) <= task.success.tilt_tol;
    }
    case SuccessSpec::Kind::containment: {
      const geo::Vec3& p = final_keypoints[static_cast<std::size_t>(task.success.contained_kp)];
      return (p.array() >= task.success.goal_min.array()).all() &&
             (p.array() <= task.success.goal_max.array()).all();
    }
  }
  return false;
}

namespace {

CameraModel synthetic_camera() {
  CameraModel cam;
  cam.fx = cam.fy = 240.0;
  cam.cx = 128.0;
  cam.cy = 96.0;
  cam.width = 256;
  cam.height = 192;

  // Perched in front of the table with a shallow pitch: vertically stacked
  // scene points need image separation for their depth discs.
  const geo::Vec3 eye(1.45, 0.0, 0.55);
  const geo::Vec3 target(0.45, 0.0, 0.12);
  const geo::Vec3 z = (target - eye).normalized();
  geo::Vec3 x = z.cross(geo::Vec3::UnitZ());
  if (x.norm() < 1e-6) x = geo::Vec3::UnitY();
  x.normalize();
  const geo::Vec3 y = z.cross(x);
  cam.extrinsics.rotation.col(0) = x;
  cam.extrinsics.rotation.col(1) = y;
  cam.extrinsics.rotation.col(2) = z;
  cam.extrinsics.translation = eye;
  return cam;
}

// Depth of the z = 0 table plane along each pixel ray; 0 where the ray never
// meets it.
std::vector<float> table_depth(const CameraModel& cam) {
  std::vector<float> depth(static_cast<std::size_t>(cam.width) * cam.height, 0.0f);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const geo::Vec3 dir = cam.extrinsics.rotation *
                            geo::Vec3((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
      if (dir.z() >= -1e-9) continue;
      const double s = -cam.extrinsics.translation.z() / dir.z();
      if (s > 0.0) depth[static_cast<std::size_t>(v) * cam.width + u] = static_cast<float>(s);
    }
  }
  return depth;
}

// Z-buffered constant-depth disc splat.
void splat(std::vector<float>& depth, const CameraModel& cam, const Eigen::Vector2d& px, double z,
           int radius) {
  if (z <= 0.0) return;
  const int cu = static_cast<int>(std::lround(px.x()));
  const int cv = static_cast<int>(std::lround(px.y()));
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy > radius * radius) continue;
      const int x = cu + dx;
      const int y = cv + dy;
      if (x < 0 || x >= cam.width || y < 0 || y >= cam.height) continue;
      float& cell = depth[static_cast<std::size_t>(y) * cam.width + x];
      if (cell == 0.0f || z < cell) cell = static_cast<float>(z);
    }
  }
}

struct HandGeometry {
  std::array<geo::Vec3, 21> points;  // task frame
};

// Inverse of the parsing heuristics: landmarks that retarget back into the
// exact EE pose and gripper state.
HandGeometry hand_from_action(const ArmAction& action) {
  HandGeometry hand;
  const geo::Vec3& x = action.pose.translation;
  const geo::Vec3 closing = action.pose.rotation.col(0);
  const geo::Vec3 approach = action.pose.rotation.col(2);
  const double gap = action.gripper > 0.5 ? 0.012 : 0.08;

  // Wrist well behind the fingers so its depth disc clears the object discs.
  const geo::Vec3 wrist = x - 0.15 * approach;
  for (int i = 0; i < 21; ++i) {
    // Unused joints cluster behind the wrist in a small fixed pattern.
    hand.points[i] = wrist - 0.01 * static_cast<double>(i % 5) * approach +
                     0.005 * static_cast<double>(i % 3) * closing;
  }
  hand.points[kWristLandmark] = wrist;
  hand.points[kThumbTipLandmark] = x - 0.5 * gap * closing;
  hand.points[kIndexTipLandmark] = x + 0.5 * gap * closing;
  return hand;
}

}  // namespace

DemoBundle render_bundle(const SyntheticTask& task, const BundleOptions& options) {
  if (options.fps <= 0.0) fail(Errc::invalid_argument, "bundle fps must be positive");
  const StateActionTrajectory& demo = task.demo;
  const int control_frames = static_cast<int>(demo.length());
  const int repeat = static_cast<int>(std::lround(options.fps * demo.dt));
  if (repeat < 1) fail(Errc::invalid_argument, "bundle fps below the control rate");
  const int frames = (control_frames - 1) * repeat + 1;

  DemoBundle bundle;
  bundle.camera = synthetic_camera();
  bundle.fps = options.fps;

  // Video-rate interpolation between control frames; control frame i lands
  // exactly at bundle frame i*repeat so decimation recovers the ground truth.
  std::vector<BimanualAction> actions(static_cast<std::size_t>(frames));
  std::vector<std::vector<geo::Vec3>> states(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    const int i = f / repeat;
    const int j = f % repeat;
    if (j == 0) {
      actions[f] = demo.actions[static_cast<std::size_t>(i)];
      states[f] = demo.states[static_cast<std::size_t>(i)];
    } else {
      const double s = static_cast<double>(j) / repeat;
      for (int arm = 0; arm < 2; ++arm) {
        actions[f][arm].pose = geo::interpolate_pose(demo.actions[i][arm].pose, demo.actions[i + 1][arm].pose, s);
        actions[f][arm].gripper = demo.actions[i][arm].gripper;  // piecewise constant
      }
      states[f].resize(demo.num_keypoints());
      for (std::size_t k = 0; k < demo.num_keypoints(); ++k) {
        states[f][k] = (1.0 - s) * demo.states[i][k] + s * demo.states[i + 1][k];
      }
    }
  }

  const std::vector<float> background = table_depth(bundle.camera);
  Rng noise_rng(options.seed, 0x6e6f6973);

  bundle.tracks.resize(demo.num_keypoints());
  for (std::size_t k = 0; k < demo.num_keypoints(); ++k) {
    bundle.tracks[k].id = demo.keypoints[k].id;
    bundle.tracks[k].label = demo.keypoints[k].label;
    bundle.tracks[k].group = demo.keypoints[k].group;
    bundle.tracks[k].object = demo.keypoints[k].object;
  }
  for (int arm = 0; arm < 2; ++arm) bundle.hands[arm].reserve(static_cast<std::size_t>(frames));

  for (int f = 0; f < frames; ++f) {
    std::vector<float> depth = background;

    for (std::size_t k = 0; k < demo.num_keypoints(); ++k) {
      double z;
      const Eigen::Vector2d px = bundle.camera.project(states[f][k], &z);
      bundle.tracks[k].pixels.push_back(px);
      splat(depth, bundle.camera, px, z, 3);
    }

    for (int arm = 0; arm < 2; ++arm) {
      const HandGeometry hand = hand_from_action(actions[f][arm]);
      HandObservation obs;
      obs.valid = true;
      const geo::Pose cam_from_task = geo::invert(bundle.camera.extrinsics);
      for (int i = 0; i < 21; ++i) {
        double z;
        obs.pixels[i] = bundle.camera.project(hand.points[i], &z);
        obs.points[i] = geo::apply(cam_from_task, hand.points[i]);
      }
      double wrist_z;
      const Eigen::Vector2d wrist_px = bundle.camera.project(hand.points[kWristLandmark], &wrist_z);
      splat(depth, bundle.camera, wrist_px, wrist_z, 3);
      bundle.hands[arm].push_back(obs);
    }

    if (options.depth_noise > 0.0) {
      for (auto& d : depth) {
        if (d > 0.0f) d = std::max(0.0f, d + static_cast<float>(options.depth_noise * noise_rng.normal()));
      }
    }
    bundle.depth.push_back(std::move(depth));
  }

  bundle.validate();
  return bundle;
}

void generate_bundle_dir(const std::string& task_id, double noise, std::uint64_t seed,
                         const std::string& out_dir) {
  const SyntheticTask& task = get_task(task_id);
  BundleOptions options;
  options.depth_noise = noise;
  options.seed = seed;
  const DemoBundle bundle = render_bundle(task, options);
  save_bundle(bundle, out_dir);

  save_template(task.tmpl, (fs::path(out_dir) / "template.json").string());
  save_object_config(task.config, (fs::path(out_dir) / "config.json").string());

  AugmentationSpec spec = task.spec;
  spec.seed = seed;
  spec.count = 100;
  save_augmentation_spec(spec, (fs::path(out_dir) / "spec.json").string());

  save_trajectory(task.demo, (fs::path(out_dir) / "gt_traj.json").string());

  // First-frame object masks: discs around each owned keypoint.
  fs::create_directories(fs::path(out_dir) / "masks");
  for (int k = 0; k < task.config.num_objects(); ++k) {
    MaskImage mask;
    mask.width = bundle.camera.width;
    mask.height = bundle.camera.height;
    mask.pixels.assign(static_cast<std::size_t>(mask.width) * mask.height, 0);
    for (int idx : task.config.owned[static_cast<std::size_t>(k)]) {
      const Eigen::Vector2d px = bundle.tracks[static_cast<std::size_t>(idx)].pixels[0];
      const int cu = static_cast<int>(std::lround(px.x()));
      const int cv = static_cast<int>(std::lround(px.y()));
      for (int dy = -5; dy <= 5; ++dy) {
        for (int dx = -5; dx <= 5; ++dx) {
          if (dx * dx + dy * dy > 25) continue;
          const int x = cu + dx;
          const int y = cv + dy;
          if (x < 0 || x >= mask.width || y < 0 || y >= mask.height) continue;
          mask.pixels[static_cast<std::size_t>(y) * mask.width + x] = 255;
        }
      }
    }
    save_mask_png(mask, (fs::path(out_dir) / "masks" / ("object_" + std::to_string(k + 1) + ".png")).string());
  }
}

}  // namespace bax::synth
