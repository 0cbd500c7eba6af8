#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "grounding.hpp"
#include "parse.hpp"
#include "rng.hpp"
#include "trajectory.hpp"

namespace bax {

// Per-object placement sampler: translation offsets relative to the demo
// centroid plus a yaw about the vertical axis through it.
struct ObjectSampler {
  std::array<std::array<double, 2>, 3> translation_range{};  // [axis][lo, hi], meters
  std::array<double, 2> yaw_range{0.0, 0.0};                 // radians
};

struct AugmentationSpec {
  WorkspaceGeometry workspace;
  geo::Plane symmetry_plane{geo::Vec3(0, 1, 0), 0.0};
  std::vector<ObjectSampler> object_samplers;
  double min_separation = 0.0;  // meters, between object centroids
  double velocity = 0.25;       // m/s, constant planning speed
  double dt = 0.1;              // seconds
  std::uint64_t seed = 0;
  int count = 0;
  int max_retries = 1000;

  void validate(int num_objects) const;
};

AugmentationSpec load_augmentation_spec(const std::string& path);
void save_augmentation_spec(const AugmentationSpec& spec, const std::string& path);

// Motion planner contract: `steps` poses (steps >= 2) with output.front() ==
// start and output.back() == goal within 1e-9.
using PlannerFn = std::function<std::vector<geo::Pose>(const geo::Pose& start, const geo::Pose& goal, int steps)>;

PlannerFn straight_line_planner();

// Adapter for an external planner process. Protocol, line-oriented text:
// stdin gets start and goal as 12 reals each (rotation row-major 9 +
// translation 3) and the step count; stdout must return `steps` such lines.
PlannerFn subprocess_planner(const std::string& command);

namespace aug {

struct SampledConfiguration {
  ObjectConfiguration config;  // augmented object frames; ownership copied from the source
  bool use_mirror = false;     // reachable only under the swapped hand-object assignment
};

// Rejection-samples an augmented configuration: per-object yaw + translation,
// accepted when every object lands in the workspace box, respects the minimum
// separation, and is reachable by its template-assigned arm (directly or
// after mirroring).
SampledConfiguration sample_configuration(const AugmentationSpec& spec, const ObjectConfiguration& source,
                                          const TaskTemplate& tmpl, Rng& rng);

// Task-frame remap taking the source object frame to the target frame.
geo::Pose object_delta(const geo::Pose& source_frame, const geo::Pose& target_frame);

// Arm assignment per object: the arm of the first template action whose
// contact pairs that object with an end-effector; -1 when never EE-contacted.
std::vector<int> assigned_arms(const TaskTemplate& tmpl);

std::vector<ArmAction> augment_skill_segment(const std::vector<ArmAction>& demo_segment,
                                             const geo::Pose& delta);

// Step count for a constant-velocity motion: max(1, ceil(distance / (velocity*dt))).
int motion_step_count(const geo::Pose& start, const geo::Pose& goal, double velocity, double dt);

// Motion segment: step count from motion_step_count unless forced. Frames
// exclude the start pose (it is the previous segment's last frame) except at
// the very beginning of an arm's stream; they exclude the goal (it is the
// next segment's first frame) except for a trailing motion with nothing after
// it, which lands on the goal exactly.
std::vector<ArmAction> plan_motion_segment(const geo::Pose& start, const geo::Pose& goal, double gripper,
                                           double velocity, double dt, const PlannerFn& planner,
                                           bool include_start = false, int forced_steps = -1,
                                           bool include_goal = false);

// Pads the shorter stream by repeating its last action; returns the number of
// appended frames per arm.
std::array<int, 2> resynchronize(std::array<std::vector<ArmAction>, 2>& streams);

// Rigid keypoint propagation: objects follow the grasping arm between grasp
// and release, stay frozen otherwise. Event timestamps must refer to the
// given action stream.
std::vector<std::vector<geo::Vec3>> propagate_keypoints(const std::vector<BimanualAction>& actions,
                                                        const GraspEventLog& events,
                                                        const std::vector<geo::Vec3>& initial_keypoints,
                                                        const std::vector<std::vector<int>>& owned);

// Re-derives the event log in the augmented time base from the gripper
// streams, carrying the demo log's object attribution in order.
GraspEventLog recompute_events(const std::vector<BimanualAction>& actions, const GraspEventLog& demo_events);

// Augmented counterpart of a demo segment: demo interval plus where it landed
// in the output stream. Padding appears as idle with an empty demo interval.
struct AugSegment {
  SegmentKind kind = SegmentKind::motion;
  int stage = -1;
  int ref = 0;
  int demo_begin = -1, demo_end = -1;
  int out_begin = 0, out_end = 0;
};

struct Provenance {
  std::uint64_t seed = 0;
  int index = -1;
  std::vector<geo::Pose> deltas;
  bool mirrored = false;
  std::array<int, 2> resync_padding{0, 0};  // frames added before sync segments
  std::array<int, 2> terminal_padding{0, 0};
};

struct AugmentedDemo {
  StateActionTrajectory traj;
  std::array<std::vector<AugSegment>, 2> segments;
  Provenance provenance;
};

struct AugmentOptions {
  double velocity = 0.25;
  double dt = 0.1;
  PlannerFn planner;               // straight-line when empty
  bool match_demo_steps = false;   // force motion step counts to the demo's
};

// Assembles one augmented trajectory: skill segments remapped equivariantly,
// motion segments replanned, idles held, arms re-synchronized before sync
// segments, keypoints propagated rigidly. Junctions between segments whose
// reference frames moved apart get a planned free-space bridge so the
// per-step velocity bound holds everywhere.
AugmentedDemo augment_demo(const StateActionTrajectory& demo, const SegmentTimeline& timeline,
                           const ObjectConfiguration& source, const std::vector<geo::Pose>& deltas,
                           const AugmentOptions& options);

struct GenerateResult {
  std::vector<AugmentedDemo> demos;
  std::vector<std::pair<int, std::string>> failures;  // (index, reason)
};

// spec.count augmentations, deterministic per (seed, index) and independent
// of the thread count. Throws when more than 10% of samples fail.
GenerateResult generate_dataset(const StateActionTrajectory& demo, const TaskTemplate& tmpl,
                                const SegmentTimeline& timeline, const ObjectConfiguration& source,
                                const AugmentationSpec& spec, int threads = 1,
                                const PlannerFn& planner = {});

}  // namespace aug
}  // namespace bax
