#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "augment.hpp"
#include "bundle.hpp"
#include "grounding.hpp"
#include "trajectory.hpp"

namespace bax::synth {

// Final-state success conditions for the built-in tasks.
struct SuccessSpec {
  enum class Kind { offset_and_tilt, containment } kind = Kind::containment;

  // offset_and_tilt: a marker keypoint must sit at the demo's final offset
  // from a target object's centroid, with the demo-matched axis tilt.
  int marker_kp = -1;
  int axis_base_kp = -1;
  int target_object = -1;
  geo::Vec3 offset = geo::Vec3::Zero();
  double tilt = 0.0;  // radians from vertical
  double offset_tol = 0.03;
  double tilt_tol = 0.15;

  // containment: a keypoint must land inside an axis-aligned goal box.
  int contained_kp = -1;
  geo::Vec3 goal_min = geo::Vec3::Zero();
  geo::Vec3 goal_max = geo::Vec3::Zero();
};

// A fully specified desk-scale task: template, scene, scripted ground-truth
// demo, augmentation defaults, and the replay success predicate.
struct SyntheticTask {
  std::string id;
  TaskTemplate tmpl;
  std::vector<KeypointMeta> keypoints;
  std::vector<geo::Vec3> initial_keypoints;
  ObjectConfiguration config;
  AugmentationSpec spec;  // workspace, plane, samplers, velocity, dt; count/seed left for callers
  double eps_skill = 0.10;
  double eps_sync = 0.30;
  double grasp_eps = 0.03;
  double support_z = 0.0;
  SuccessSpec success;
  StateActionTrajectory demo;
};

std::vector<std::string> task_ids();
const SyntheticTask& get_task(const std::string& id);  // throws Errc::unknown_task

// Success predicate on a final keypoint state; tolerant of the mirrored
// branch (offsets compared up to reflection across the symmetry plane).
bool evaluate_success(const SyntheticTask& task, const std::vector<geo::Vec3>& final_keypoints);

struct BundleOptions {
  double fps = 30.0;
  double depth_noise = 0.0;  // meters, i.i.d. Gaussian on every depth pixel
  std::uint64_t seed = 1;
};

// Renders the task's ground-truth demo as a camera bundle: depth splats with
// z-buffered keypoint/wrist discs over a table plane, tracked pixels, and
// hand landmark streams retargetable back into the exact EE poses.
DemoBundle render_bundle(const SyntheticTask& task, const BundleOptions& options);

// Writes the full bundle directory plus template.json, config.json,
// spec.json, masks/, and the ground truth gt_traj.json.
void generate_bundle_dir(const std::string& task_id, double noise, std::uint64_t seed,
                         const std::string& out_dir);

}  // namespace bax::synth
