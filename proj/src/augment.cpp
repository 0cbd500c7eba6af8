#include "augment.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "error.hpp"
#include "json_io.hpp"

namespace bax {

using jsonio::json;

void AugmentationSpec::validate(int num_objects) const {
  if (velocity <= 0.0) fail(Errc::validation, "spec velocity must be positive");
  if (dt <= 0.0) fail(Errc::validation, "spec dt must be positive");
  if (min_separation < 0.0) fail(Errc::validation, "spec min_separation must be non-negative");
  if (count < 0) fail(Errc::validation, "spec count must be non-negative");
  if (max_retries < 1) fail(Errc::validation, "spec max_retries must be positive");
  if (num_objects >= 0 && static_cast<int>(object_samplers.size()) != num_objects)
    fail(Errc::validation, "spec needs one object sampler per object");
  for (const auto& sampler : object_samplers) {
    for (const auto& range : sampler.translation_range) {
      if (!(range[0] <= range[1]) || !std::isfinite(range[0]) || !std::isfinite(range[1]))
        fail(Errc::validation, "sampler translation range must be finite and ordered");
    }
    if (!(sampler.yaw_range[0] <= sampler.yaw_range[1]))
      fail(Errc::validation, "sampler yaw range must be ordered");
  }
  if (std::abs(symmetry_plane.normal.norm() - 1.0) > 1e-9)
    fail(Errc::validation, "symmetry plane normal must be unit length");
  if ((workspace.box_min.array() > workspace.box_max.array()).any())
    fail(Errc::validation, "workspace box is inverted");
}

AugmentationSpec load_augmentation_spec(const std::string& path) {
  const json j = jsonio::load_json_file(path);
  AugmentationSpec spec;
  const auto& box = j.at("workspace_box");
  spec.workspace.box_min = jsonio::vec3_from_json(box.at("min"));
  spec.workspace.box_max = jsonio::vec3_from_json(box.at("max"));
  const auto& arms = j.at("arms");
  if (arms.size() != 2) fail(Errc::validation, path + ": two arms required");
  for (int arm = 0; arm < 2; ++arm) {
    spec.workspace.arm_base[arm] = jsonio::vec3_from_json(arms[arm].at("base_position"));
    spec.workspace.reach_radius[arm] = arms[arm].at("reach_radius").get<double>();
  }
  const auto& plane = j.at("symmetry_plane");
  spec.symmetry_plane.normal = jsonio::vec3_from_json(plane.at("normal")).normalized();
  spec.symmetry_plane.offset = plane.at("offset").get<double>();
  for (const auto& sj : j.at("object_samplers")) {
    ObjectSampler sampler;
    const auto& tr = sj.at("translation_range");
    if (tr.size() != 3) fail(Errc::validation, path + ": translation_range needs 3 axis ranges");
    for (int axis = 0; axis < 3; ++axis) {
      sampler.translation_range[axis] = {tr[axis][0].get<double>(), tr[axis][1].get<double>()};
    }
    const auto& yr = sj.at("yaw_range");
    sampler.yaw_range = {yr[0].get<double>(), yr[1].get<double>()};
    spec.object_samplers.push_back(sampler);
  }
  spec.min_separation = j.value("min_separation", 0.0);
  spec.velocity = j.value("velocity", 0.25);
  spec.dt = j.value("dt", 0.1);
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.count = j.value("count", 0);
  spec.max_retries = j.value("max_retries", 1000);
  spec.validate(-1);
  return spec;
}

void save_augmentation_spec(const AugmentationSpec& spec, const std::string& path) {
  json arms = json::array();
  for (int arm = 0; arm < 2; ++arm) {
    arms.push_back({{"base_position", jsonio::vec3_to_json(spec.workspace.arm_base[arm])},
                    {"reach_radius", spec.workspace.reach_radius[arm]}});
  }
  json samplers = json::array();
  for (const auto& sampler : spec.object_samplers) {
    json tr = json::array();
    for (int axis = 0; axis < 3; ++axis)
      tr.push_back({sampler.translation_range[axis][0], sampler.translation_range[axis][1]});
    samplers.push_back({{"translation_range", tr}, {"yaw_range", {sampler.yaw_range[0], sampler.yaw_range[1]}}});
  }
  jsonio::save_json_file(
      path, json{{"workspace_box",
                  {{"min", jsonio::vec3_to_json(spec.workspace.box_min)},
                   {"max", jsonio::vec3_to_json(spec.workspace.box_max)}}},
                 {"arms", arms},
                 {"symmetry_plane",
                  {{"normal", jsonio::vec3_to_json(spec.symmetry_plane.normal)},
                   {"offset", spec.symmetry_plane.offset}}},
                 {"object_samplers", samplers},
                 {"min_separation", spec.min_separation},
                 {"velocity", spec.velocity},
                 {"dt", spec.dt},
                 {"seed", spec.seed},
                 {"count", spec.count},
                 {"max_retries", spec.max_retries}});
}

PlannerFn straight_line_planner() {
  return [](const geo::Pose& start, const geo::Pose& goal, int steps) {
    std::vector<geo::Pose> out;
    out.reserve(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
      out.push_back(geo::interpolate_pose(start, goal, static_cast<double>(i) / (steps - 1)));
    }
    return out;
  };
}

namespace {

void write_pose_line(std::ostream& os, const geo::Pose& p) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) os << p.rotation(r, c) << ' ';
  os << p.translation.x() << ' ' << p.translation.y() << ' ' << p.translation.z() << '\n';
}

geo::Pose read_pose_line(const std::string& line) {
  std::istringstream is(line);
  geo::Pose p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (!(is >> p.rotation(r, c))) fail(Errc::planner_failure, "planner output: short pose record");
  for (int i = 0; i < 3; ++i)
    if (!(is >> p.translation[i])) fail(Errc::planner_failure, "planner output: short pose record");
  return p;
}

}  // namespace

PlannerFn subprocess_planner(const std::string& command) {
  return [command](const geo::Pose& start, const geo::Pose& goal, int steps) {
    namespace fs = std::filesystem;
    static std::atomic<std::uint64_t> counter{0};
    const auto tag = std::to_string(::getpid()) + "_" + std::to_string(counter.fetch_add(1));
    const fs::path in = fs::temp_directory_path() / ("bax_plan_in_" + tag);
    const fs::path out = fs::temp_directory_path() / ("bax_plan_out_" + tag);
    {
      std::ofstream os(in);
      os.precision(17);
      write_pose_line(os, start);
      write_pose_line(os, goal);
      os << steps << '\n';
    }
    const std::string cmdline = command + " < " + in.string() + " > " + out.string();
    const int rc = std::system(cmdline.c_str());
    std::vector<geo::Pose> poses;
    if (rc == 0) {
      std::ifstream is(out);
      std::string line;
      while (std::getline(is, line) && static_cast<int>(poses.size()) < steps) {
        if (line.empty()) continue;
        poses.push_back(read_pose_line(line));
      }
    }
    fs::remove(in);
    fs::remove(out);
    if (rc != 0) fail(Errc::planner_failure, "planner command failed: " + command);
    if (static_cast<int>(poses.size()) != steps)
      fail(Errc::planner_failure, "planner returned " + std::to_string(poses.size()) + " poses, wanted " +
                                      std::to_string(steps));
    return poses;
  };
}

namespace aug {

geo::Pose object_delta(const geo::Pose& source_frame, const geo::Pose& target_frame) {
  return geo::compose(target_frame, geo::invert(source_frame));
}

std::vector<int> assigned_arms(const TaskTemplate& tmpl) {
  std::vector<int> assigned(static_cast<std::size_t>(tmpl.num_objects), -1);
  for (const auto& stage : tmpl.stages) {
    for (const auto& action : stage.actions) {
      int ee = -1, obj = 0;
      for (const auto& token : action.contact) {
        if (token.is_ee) ee = token.index;
        else obj = token.index;
      }
      if (ee >= 0 && obj > 0 && assigned[static_cast<std::size_t>(obj - 1)] < 0)
        assigned[static_cast<std::size_t>(obj - 1)] = ee;
    }
  }
  return assigned;
}

SampledConfiguration sample_configuration(const AugmentationSpec& spec, const ObjectConfiguration& source,
                                          const TaskTemplate& tmpl, Rng& rng) {
  const int num_objects = source.num_objects();
  spec.validate(num_objects);
  const auto arms_for = assigned_arms(tmpl);

  for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
    std::vector<geo::Pose> targets(static_cast<std::size_t>(num_objects));
    for (int k = 0; k < num_objects; ++k) {
      const auto& sampler = spec.object_samplers[static_cast<std::size_t>(k)];
      geo::Vec3 offset;
      for (int axis = 0; axis < 3; ++axis) {
        offset[axis] = rng.uniform(sampler.translation_range[axis][0], sampler.translation_range[axis][1]);
      }
      const double yaw = rng.uniform(sampler.yaw_range[0], sampler.yaw_range[1]);
      geo::Pose target;
      target.rotation = Eigen::AngleAxisd(yaw, geo::Vec3::UnitZ()).toRotationMatrix();
      target.translation = source.frames[static_cast<std::size_t>(k)].translation + offset;
      targets[static_cast<std::size_t>(k)] = target;
    }

    bool inside = true;
    for (const auto& t : targets) inside = inside && spec.workspace.contains(t.translation);
    if (!inside) continue;

    bool separated = true;
    for (int a = 0; a < num_objects && separated; ++a) {
      for (int b = a + 1; b < num_objects; ++b) {
        if ((targets[a].translation - targets[b].translation).norm() < spec.min_separation) {
          separated = false;
          break;
        }
      }
    }
    if (!separated) continue;

    auto reachable_with = [&](bool swapped) {
      for (int k = 0; k < num_objects; ++k) {
        const int arm = arms_for[static_cast<std::size_t>(k)];
        if (arm < 0) continue;
        const int use = swapped ? 1 - arm : arm;
        const geo::Vec3& c = targets[static_cast<std::size_t>(k)].translation;
        if ((c - spec.workspace.arm_base[use]).norm() > spec.workspace.reach_radius[use]) return false;
      }
      return true;
    };

    SampledConfiguration out;
    if (reachable_with(false)) {
      out.use_mirror = false;
    } else if (reachable_with(true)) {
      out.use_mirror = true;
    } else {
      continue;
    }
    out.config.frames = std::move(targets);
    out.config.owned = source.owned;
    return out;
  }
  fail(Errc::unsatisfiable_spec,
       "no feasible object configuration after " + std::to_string(spec.max_retries) + " attempts");
}

std::vector<ArmAction> augment_skill_segment(const std::vector<ArmAction>& demo_segment,
                                             const geo::Pose& delta) {
  std::vector<ArmAction> out;
  out.reserve(demo_segment.size());
  for (const auto& a : demo_segment) {
    out.push_back({geo::compose(delta, a.pose), a.gripper});
  }
  return out;
}

int motion_step_count(const geo::Pose& start, const geo::Pose& goal, double velocity, double dt) {
  if (velocity <= 0.0 || dt <= 0.0) fail(Errc::invalid_argument, "velocity and dt must be positive");
  const double distance = (goal.translation - start.translation).norm();
  return std::max(1, static_cast<int>(std::ceil(distance / (velocity * dt) - 1e-12)));
}

std::vector<ArmAction> plan_motion_segment(const geo::Pose& start, const geo::Pose& goal, double gripper,
                                           double velocity, double dt, const PlannerFn& planner,
                                           bool include_start, int forced_steps, bool include_goal) {
  int steps = forced_steps;
  if (steps < 0) steps = motion_step_count(start, goal, velocity, dt);
  if (steps == 0) return {};

  const PlannerFn& plan = planner;
  // The planner contract includes both endpoints; the segment keeps only the
  // frames that belong to it.
  int request = steps + (include_start ? 0 : 1) + (include_goal ? 0 : 1);
  const int first = include_start ? 0 : 1;
  if (request < 2) request = 2;
  const auto poses = plan(start, goal, request);
  if (static_cast<int>(poses.size()) != request)
    fail(Errc::planner_failure, "planner returned a wrong-length sequence");
  if ((poses.front().translation - start.translation).norm() > 1e-9 ||
      geo::rotation_angle_between(poses.front().rotation, start.rotation) > 1e-9)
    fail(Errc::planner_failure, "planner output does not start at the start pose");
  if ((poses.back().translation - goal.translation).norm() > 1e-9 ||
      geo::rotation_angle_between(poses.back().rotation, goal.rotation) > 1e-9)
    fail(Errc::planner_failure, "planner output does not end at the goal pose");

  std::vector<ArmAction> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int i = first; i < first + steps; ++i) {
    out.push_back({poses[static_cast<std::size_t>(i)], gripper});
  }
  return out;
}

std::array<int, 2> resynchronize(std::array<std::vector<ArmAction>, 2>& streams) {
  std::array<int, 2> padded{0, 0};
  const std::size_t target = std::max(streams[0].size(), streams[1].size());
  for (int arm = 0; arm < 2; ++arm) {
    if (streams[arm].empty() && target > 0)
      fail(Errc::invalid_argument, "cannot pad an empty stream");
    while (streams[arm].size() < target) {
      streams[arm].push_back(streams[arm].back());
      padded[arm]++;
    }
  }
  return padded;
}

GraspEventLog recompute_events(const std::vector<BimanualAction>& actions, const GraspEventLog& demo_events) {
  GraspEventLog out;
  for (int arm = 0; arm < 2; ++arm) {
    const auto& source = demo_events.arms[arm];
    std::size_t next = 0;
    for (std::size_t t = 1; t < actions.size(); ++t) {
      const double prev = actions[t - 1][arm].gripper;
      const double curr = actions[t][arm].gripper;
      if (curr == prev) continue;
      const bool grasp = curr > prev;
      if (next >= source.size() || source[next].grasp != grasp)
        fail(Errc::validation, "augmented gripper transitions diverge from the demo's on arm " +
                                   std::to_string(arm));
      out.arms[arm].push_back({static_cast<int>(t), grasp, source[next].object});
      ++next;
    }
    if (next != source.size())
      fail(Errc::validation, "augmented stream lost gripper transitions on arm " + std::to_string(arm));
  }
  return out;
}

std::vector<std::vector<geo::Vec3>> propagate_keypoints(const std::vector<BimanualAction>& actions,
                                                        const GraspEventLog& events,
                                                        const std::vector<geo::Vec3>& initial_keypoints,
                                                        const std::vector<std::vector<int>>& owned) {
  const std::size_t length = actions.size();
  const std::size_t num_objects = owned.size();

  struct Attachment {
    bool active = false;
    int arm = -1;
    geo::Pose grasp_inverse;
    std::vector<geo::Vec3> at_grasp;
  };
  std::vector<Attachment> attachments(num_objects);

  struct TimedEvent {
    int t, arm;
    bool grasp;
    int object;
  };
  std::vector<TimedEvent> merged;
  for (int arm = 0; arm < 2; ++arm) {
    for (const auto& e : events.arms[arm]) merged.push_back({e.t, arm, e.grasp, e.object});
  }
  // Releases before grasps at the same timestamp, so an instantaneous
  // handover re-anchors cleanly; otherwise the latest grasp wins.
  std::sort(merged.begin(), merged.end(), [](const TimedEvent& a, const TimedEvent& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.grasp != b.grasp) return !a.grasp;
    return a.arm < b.arm;
  });

  std::vector<std::vector<geo::Vec3>> states(length);
  std::vector<geo::Vec3> current = initial_keypoints;
  std::size_t next_event = 0;

  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t k = 0; k < num_objects; ++k) {
      auto& att = attachments[k];
      if (!att.active) continue;
      const geo::Pose motion = geo::compose(actions[t][att.arm].pose, att.grasp_inverse);
      const auto& indices = owned[k];
      for (std::size_t i = 0; i < indices.size(); ++i) {
        current[static_cast<std::size_t>(indices[i])] = geo::apply(motion, att.at_grasp[i]);
      }
    }
    states[t] = current;

    while (next_event < merged.size() && merged[next_event].t == static_cast<int>(t)) {
      const auto& e = merged[next_event++];
      if (e.grasp) {
        if (e.object <= 0 || e.object > static_cast<int>(num_objects)) continue;  // unattributed grasp
        const std::size_t k = static_cast<std::size_t>(e.object - 1);
        if (owned[k].empty())
          fail(Errc::unowned_keypoints, "object " + std::to_string(e.object) + " grasped but owns no keypoints");
        auto& att = attachments[k];
        att.active = true;
        att.arm = e.arm;
        att.grasp_inverse = geo::invert(actions[t][e.arm].pose);
        att.at_grasp.clear();
        for (int idx : owned[k]) att.at_grasp.push_back(current[static_cast<std::size_t>(idx)]);
      } else {
        for (auto& att : attachments) {
          if (att.active && att.arm == e.arm) att.active = false;
        }
      }
    }
  }
  return states;
}

namespace {

struct ArmBuild {
  std::vector<ArmAction> out;
  std::vector<AugSegment> segments;
  std::size_t next = 0;
};

geo::Pose delta_for(const std::vector<geo::Pose>& deltas, int ref) {
  if (ref <= 0) return geo::Pose::identity();
  return deltas[static_cast<std::size_t>(ref - 1)];
}

}  // namespace

AugmentedDemo augment_demo(const StateActionTrajectory& demo, const SegmentTimeline& timeline,
                           const ObjectConfiguration& source, const std::vector<geo::Pose>& deltas,
                           const AugmentOptions& options) {
  const int length = static_cast<int>(demo.length());
  if (timeline.length != length) fail(Errc::validation, "timeline length differs from the demo");
  if (static_cast<int>(deltas.size()) != source.num_objects())
    fail(Errc::validation, "need one delta per object");
  timeline.validate();
  const PlannerFn planner = options.planner ? options.planner : straight_line_planner();

  std::array<ArmBuild, 2> build;
  auto demo_action = [&](int arm, int t) -> const ArmAction& {
    return demo.actions[static_cast<std::size_t>(t)][arm];
  };

  // Relocation can tear adjacent skill segments apart when their reference
  // frames moved differently and no motion segment sits between them. A
  // planned free-space bridge restores the velocity bound; demo-sized steps
  // (identity replay included) never trigger it.
  auto bridge_into = [&](int arm, const Segment& seg) {
    ArmBuild& b = build[arm];
    if (!seg.is_skill() || b.out.empty()) return;
    const geo::Pose target = geo::compose(delta_for(deltas, seg.ref), demo_action(arm, seg.begin).pose);
    const double jump = (target.translation - b.out.back().pose.translation).norm();
    double demo_jump = 0.0;
    if (seg.begin > 0) {
      demo_jump = (demo_action(arm, seg.begin).pose.translation -
                   demo_action(arm, seg.begin - 1).pose.translation)
                      .norm();
    }
    if (jump <= std::max(options.velocity * options.dt, demo_jump) + 1e-9) return;
    const int out_begin = static_cast<int>(b.out.size());
    const auto planned = plan_motion_segment(b.out.back().pose, target, b.out.back().gripper,
                                             options.velocity, options.dt, planner);
    b.out.insert(b.out.end(), planned.begin(), planned.end());
    b.segments.push_back(
        {SegmentKind::motion, -1, 0, -1, -1, out_begin, static_cast<int>(b.out.size())});
  };

  auto process = [&](int arm, const Segment& seg) {
    ArmBuild& b = build[arm];
    const int out_begin = static_cast<int>(b.out.size());
    switch (seg.kind) {
      case SegmentKind::skill_async:
      case SegmentKind::skill_sync: {
        const geo::Pose delta = delta_for(deltas, seg.ref);
        for (int t = seg.begin; t < seg.end; ++t) {
          const ArmAction& a = demo_action(arm, t);
          b.out.push_back({geo::compose(delta, a.pose), a.gripper});
        }
        break;
      }
      case SegmentKind::idle: {
        const ArmAction hold = b.out.empty() ? demo_action(arm, seg.begin) : b.out.back();
        for (int t = seg.begin; t < seg.end; ++t) b.out.push_back(hold);
        break;
      }
      case SegmentKind::motion: {
        const bool include_start = b.out.empty();
        const geo::Pose start = include_start ? demo_action(arm, seg.begin).pose : b.out.back().pose;
        geo::Pose goal;
        bool include_goal = false;
        if (b.next + 1 < timeline.arms[arm].size()) {
          const Segment& following = timeline.arms[arm][b.next + 1];
          if (following.is_skill()) {
            goal = geo::compose(delta_for(deltas, following.ref), demo_action(arm, following.begin).pose);
          } else {
            goal = demo_action(arm, following.begin).pose;
          }
        } else {
          // Trailing retreat: land on the demo's final pose exactly.
          goal = demo_action(arm, length - 1).pose;
          include_goal = true;
        }
        const double gripper = demo_action(arm, seg.begin).gripper;
        const int forced = options.match_demo_steps ? seg.frames() : -1;
        const auto planned = plan_motion_segment(start, goal, gripper, options.velocity, options.dt, planner,
                                                 include_start, forced, include_goal);
        b.out.insert(b.out.end(), planned.begin(), planned.end());
        break;
      }
    }
    b.segments.push_back(
        {seg.kind, seg.stage, seg.ref, seg.begin, seg.end, out_begin, static_cast<int>(b.out.size())});
  };

  Provenance provenance;
  provenance.deltas = deltas;

  while (true) {
    for (int arm = 0; arm < 2; ++arm) {
      auto& b = build[arm];
      while (b.next < timeline.arms[arm].size() &&
             timeline.arms[arm][b.next].kind != SegmentKind::skill_sync) {
        bridge_into(arm, timeline.arms[arm][b.next]);
        process(arm, timeline.arms[arm][b.next]);
        b.next++;
      }
    }
    const bool pending0 = build[0].next < timeline.arms[0].size();
    const bool pending1 = build[1].next < timeline.arms[1].size();
    if (!pending0 && !pending1) break;
    if (pending0 != pending1) fail(Errc::validation, "sync segments unpaired across arms");

    // Bridges into the sync must land before the padding so both arms still
    // arrive together.
    for (int arm = 0; arm < 2; ++arm) bridge_into(arm, timeline.arms[arm][build[arm].next]);

    // Both arms sit before the same sync segment; pad the early one.
    std::array<std::vector<ArmAction>, 2> streams{std::move(build[0].out), std::move(build[1].out)};
    const auto padded = resynchronize(streams);
    for (int arm = 0; arm < 2; ++arm) {
      build[arm].out = std::move(streams[arm]);
      if (padded[arm] > 0) {
        build[arm].segments.push_back({SegmentKind::idle, -1, 0, -1, -1,
                                       static_cast<int>(build[arm].out.size()) - padded[arm],
                                       static_cast<int>(build[arm].out.size())});
        provenance.resync_padding[arm] += padded[arm];
      }
    }
    for (int arm = 0; arm < 2; ++arm) {
      process(arm, timeline.arms[arm][build[arm].next]);
      build[arm].next++;
    }
  }

  {
    std::array<std::vector<ArmAction>, 2> streams{std::move(build[0].out), std::move(build[1].out)};
    const auto padded = resynchronize(streams);
    for (int arm = 0; arm < 2; ++arm) {
      build[arm].out = std::move(streams[arm]);
      if (padded[arm] > 0) {
        build[arm].segments.push_back({SegmentKind::idle, -1, 0, -1, -1,
                                       static_cast<int>(build[arm].out.size()) - padded[arm],
                                       static_cast<int>(build[arm].out.size())});
        provenance.terminal_padding[arm] += padded[arm];
      }
    }
  }

  AugmentedDemo result;
  result.provenance = std::move(provenance);
  result.segments = {std::move(build[0].segments), std::move(build[1].segments)};

  StateActionTrajectory& traj = result.traj;
  traj.dt = demo.dt;
  traj.keypoints = demo.keypoints;
  const std::size_t out_length = build[0].out.size();
  traj.actions.reserve(out_length);
  for (std::size_t t = 0; t < out_length; ++t) {
    traj.actions.push_back({build[0].out[t], build[1].out[t]});
  }

  std::vector<geo::Vec3> initial(demo.num_keypoints());
  for (std::size_t i = 0; i < demo.num_keypoints(); ++i) {
    const int owner = demo.keypoints[i].object;
    initial[i] = owner > 0 ? geo::apply(deltas[static_cast<std::size_t>(owner - 1)], demo.states[0][i])
                           : demo.states[0][i];
  }
  const GraspEventLog events = recompute_events(traj.actions, timeline.events);
  traj.states = propagate_keypoints(traj.actions, events, initial, source.owned);
  traj.validate();
  return result;
}

GenerateResult generate_dataset(const StateActionTrajectory& demo, const TaskTemplate& tmpl,
                                const SegmentTimeline& timeline, const ObjectConfiguration& source,
                                const AugmentationSpec& spec, int threads, const PlannerFn& planner) {
  spec.validate(source.num_objects());
  if (std::abs(spec.dt - demo.dt) > 1e-9)
    fail(Errc::validation, "spec dt differs from the demo control period");
  if (threads < 1) threads = 1;

  // The mirrored branch reuses the demo's grounding with arm roles swapped;
  // mirroring commutes with grounding, so re-detection would be redundant.
  const auto mirrored = ground::mirror_template_inputs(demo, source, tmpl, spec.symmetry_plane);
  SegmentTimeline mirrored_timeline = timeline;
  std::swap(mirrored_timeline.arms[0], mirrored_timeline.arms[1]);
  std::swap(mirrored_timeline.events.arms[0], mirrored_timeline.events.arms[1]);

  std::vector<std::optional<AugmentedDemo>> slots(static_cast<std::size_t>(spec.count));
  std::vector<std::string> errors(static_cast<std::size_t>(spec.count));

  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      try {
        Rng rng(spec.seed, static_cast<std::uint64_t>(i));
        const SampledConfiguration sample = aug::sample_configuration(spec, source, tmpl, rng);
        const StateActionTrajectory& base = sample.use_mirror ? mirrored.traj : demo;
        const ObjectConfiguration& base_config = sample.use_mirror ? mirrored.config : source;
        const SegmentTimeline& base_timeline = sample.use_mirror ? mirrored_timeline : timeline;

        std::vector<geo::Pose> deltas;
        deltas.reserve(static_cast<std::size_t>(base_config.num_objects()));
        for (int k = 0; k < base_config.num_objects(); ++k) {
          deltas.push_back(object_delta(base_config.frames[static_cast<std::size_t>(k)],
                                        sample.config.frames[static_cast<std::size_t>(k)]));
        }

        AugmentOptions options;
        options.velocity = spec.velocity;
        options.dt = spec.dt;
        options.planner = planner;
        AugmentedDemo result = augment_demo(base, base_timeline, base_config, deltas, options);
        result.provenance.seed = spec.seed;
        result.provenance.index = i;
        result.provenance.mirrored = sample.use_mirror;
        slots[static_cast<std::size_t>(i)] = std::move(result);
      } catch (const Error& e) {
        errors[static_cast<std::size_t>(i)] = e.what();
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(i)] = e.what();
      }
    }
  };

  if (threads == 1 || spec.count < 2) {
    worker(0, spec.count);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (spec.count + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const int begin = w * chunk;
      const int end = std::min(spec.count, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& t : pool) t.join();
  }

  GenerateResult result;
  for (int i = 0; i < spec.count; ++i) {
    if (slots[static_cast<std::size_t>(i)]) {
      result.demos.push_back(std::move(*slots[static_cast<std::size_t>(i)]));
    } else {
      result.failures.emplace_back(i, errors[static_cast<std::size_t>(i)]);
    }
  }
  if (10 * result.failures.size() > static_cast<std::size_t>(spec.count)) {
    fail(Errc::validation, std::to_string(result.failures.size()) + "/" + std::to_string(spec.count) +
                               " augmentations failed; first: " +
                               (result.failures.empty() ? "" : result.failures.front().second));
  }
  return result;
}

}  // namespace aug
}  // namespace bax
