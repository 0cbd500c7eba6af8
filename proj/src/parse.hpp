#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bundle.hpp"
#include "trajectory.hpp"

namespace bax {

// Axis-aligned workspace bounds plus one reach sphere per arm; the default
// reachability model standing in for robot-specific IK.
struct WorkspaceGeometry {
  geo::Vec3 box_min{-1.0, -1.0, -1.0};
  geo::Vec3 box_max{1.0, 1.0, 1.0};
  std::array<geo::Vec3, 2> arm_base{geo::Vec3::Zero(), geo::Vec3::Zero()};
  std::array<double, 2> reach_radius{1e9, 1e9};

  bool contains(const geo::Vec3& p) const {
    return (p.array() >= box_min.array()).all() && (p.array() <= box_max.array()).all();
  }
  bool reachable(int arm, const geo::Vec3& p) const {
    return contains(p) && (p - arm_base[arm]).norm() <= reach_radius[arm];
  }
};

using ReachPredicate = std::function<bool(int arm, const geo::Pose&)>;

struct ParseOptions {
  double target_rate_hz = 10.0;
  int depth_window = 5;        // odd, pixels
  double close_thresh = 0.02;  // meters, gripper considered closed below
  double open_thresh = 0.05;   // meters, gripper considered open above
  double v_jump = 1.5;         // m/s, per-step displacement bound for jump detection
  std::optional<WorkspaceGeometry> workspace;  // reach predicate source; empty = unconstrained
};

namespace parse {

// 21 task-frame landmarks for one arm at one timestamp.
struct HandFrame {
  std::array<geo::Vec3, 21> points{};

  const geo::Vec3& wrist() const { return points[kWristLandmark]; }
  const geo::Vec3& thumb_tip() const { return points[kThumbTipLandmark]; }
  const geo::Vec3& index_tip() const { return points[kIndexTipLandmark]; }
};

struct Track3d {
  std::vector<geo::Vec3> points;       // task frame
  std::vector<bool> interpolated;      // true where depth was missing and filled in
};

// Robust depth around a pixel: median of the valid window samples after
// dropping values more than 3 MADs from the window median. NaN when the
// window holds no valid depth.
double robust_window_depth(const std::vector<float>& depth_frame, int width, int height, double u, double v,
                           int window);

Track3d backproject_track(const KeypointTrack& track, const std::vector<std::vector<float>>& depth,
                          const CameraModel& camera, int window);

// Midpoint translation between thumb and index tips; rotation frame built
// from the wrist->midpoint approach direction (z axis) and the thumb->index
// closing direction (x axis).
geo::Pose hand_to_ee(const HandFrame& hand);

// Hysteresis thresholding of the thumb-index gap; frames without a hand keep
// the previous state. Initial state is open.
std::vector<double> gripper_signal(const std::vector<std::optional<HandFrame>>& hands, double close_thresh,
                                   double open_thresh);

struct RepairResult {
  std::vector<geo::Pose> poses;
  std::vector<bool> replaced;
};

// Replaces out-of-reach frames and jump frames by cubic-spline interpolation
// (translation channels) and geodesic interpolation (rotation) between the
// bracketing valid frames. Endpoints must be valid; fails when more than half
// of the frames are invalid.
RepairResult repair_trajectory(const std::vector<geo::Pose>& poses, const std::vector<bool>& known_invalid,
                               const ReachPredicate& reach, int arm, double v_jump, double dt);

StateActionTrajectory parse_demo(const DemoBundle& bundle, const ParseOptions& options);

// Nearest-frame decimation indices from source fps to the target rate.
std::vector<std::size_t> resample_indices(std::size_t frame_count, double fps, double target_rate_hz);

}  // namespace parse
}  // namespace bax
