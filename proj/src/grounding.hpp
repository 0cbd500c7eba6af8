#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bundle.hpp"
#include "trajectory.hpp"

namespace bax {

// One side of a declared contact: an end-effector (index 0/1) or an object
// (index 1..K).
struct ContactToken {
  bool is_ee = false;
  int index = 0;
};

struct TemplateAction {
  std::optional<int> arm;  // 0/1 for async actions; empty for a sync action (covers both arms)
  std::array<ContactToken, 2> contact{};
  int ref = 0;  // reference frame: 0 = task frame, k in [1, K] = object k
};

struct TemplateStage {
  bool sync = false;
  std::vector<TemplateAction> actions;
};

// Symbolic task description: object count plus the ordered stage list.
struct TaskTemplate {
  int num_objects = 0;
  std::vector<TemplateStage> stages;
};

// Returns one message per violated template invariant; empty means valid.
std::vector<std::string> validate_template(const TaskTemplate& tmpl);

TaskTemplate load_template(const std::string& path);
void save_template(const TaskTemplate& tmpl, const std::string& path);

// K object reference frames in the task frame plus keypoint ownership
// (indices into the trajectory's keypoint list, per object).
struct ObjectConfiguration {
  std::vector<geo::Pose> frames;
  std::vector<std::vector<int>> owned;

  int num_objects() const { return static_cast<int>(frames.size()); }
};

std::vector<std::vector<int>> ownership_from_metadata(const std::vector<KeypointMeta>& keypoints,
                                                      int num_objects);

struct MaskImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, nonzero = inside
};

MaskImage load_mask_png(const std::string& path);
void save_mask_png(const MaskImage& mask, const std::string& path);

// Object frames from first-frame segmentation masks: depth-robust centroid of
// the masked pixels, identity rotation.
ObjectConfiguration object_frames_from_masks(const std::vector<MaskImage>& masks,
                                             const std::vector<float>& depth0, const CameraModel& camera,
                                             const std::vector<KeypointMeta>& keypoints);

// config.json alternative to masks: explicit frames, ownership from metadata.
ObjectConfiguration load_object_config(const std::string& path, const std::vector<KeypointMeta>& keypoints,
                                       int num_objects);
void save_object_config(const ObjectConfiguration& config, const std::string& path);

enum class SegmentKind { motion, skill_async, skill_sync, idle };

const char* segment_kind_name(SegmentKind k);

// Half-open frame interval [begin, end) labeled with the template stage that
// produced it (-1 for gap-filled motion/idle) and its assigned reference.
struct Segment {
  SegmentKind kind = SegmentKind::motion;
  int stage = -1;
  int begin = 0;
  int end = 0;
  int ref = 0;

  int frames() const { return end - begin; }
  bool is_skill() const { return kind == SegmentKind::skill_async || kind == SegmentKind::skill_sync; }
};

struct GraspEvent {
  int t = 0;
  bool grasp = false;  // false = release
  int object = 0;      // grasped object index; 0 when unresolved
};

struct GraspEventLog {
  std::array<std::vector<GraspEvent>, 2> arms;
};

struct SegmentTimeline {
  int length = 0;
  std::array<std::vector<Segment>, 2> arms;
  GraspEventLog events;

  // Checks the partition / ordering / sync-interval invariants.
  void validate() const;
};

void save_timeline(const SegmentTimeline& timeline, const std::string& path);
SegmentTimeline load_timeline(const std::string& path);

namespace ground {

// Grounds the template's stages into per-arm motion / skill / idle segments
// over the demo, and extracts the grasp/release event log.
SegmentTimeline ground_segments(const StateActionTrajectory& traj, const TaskTemplate& tmpl,
                                const ObjectConfiguration& config, double eps_skill, double eps_sync);

// Reflects keypoints and EE poses across the plane and swaps the arm streams.
StateActionTrajectory mirror_trajectory(const StateActionTrajectory& traj, const geo::Plane& plane);

// Reflects the object frames; ownership is untouched.
ObjectConfiguration mirror_config(const ObjectConfiguration& config, const geo::Plane& plane);

// Swaps ee0/ee1 tokens and arm assignments.
TaskTemplate mirror_template(const TaskTemplate& tmpl);

struct MirroredInputs {
  StateActionTrajectory traj;
  ObjectConfiguration config;
  TaskTemplate tmpl;
};

// Reflects every keypoint, object frame, and EE pose across the workspace
// symmetry plane and swaps the arm roles (streams and ee tokens).
MirroredInputs mirror_template_inputs(const StateActionTrajectory& traj, const ObjectConfiguration& config,
                                      const TaskTemplate& tmpl, const geo::Plane& plane);

}  // namespace ground
}  // namespace bax
