#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace bax {

struct CameraModel {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;  // pixels
  int width = 0, height = 0;
  geo::Pose extrinsics;  // camera frame -> task frame

  void validate() const;

  // Pinhole ray at depth z (camera frame), then into the task frame.
  geo::Vec3 backproject(double u, double v, double z) const;

  // Task-frame point -> pixel coordinates; returns the camera-frame depth in z_out.
  Eigen::Vector2d project(const geo::Vec3& task_point, double* z_out = nullptr) const;
};

struct KeypointTrack {
  std::string id;
  std::string label;
  int group = 0;
  int object = 0;                        // owner object index in [1, K]
  std::vector<Eigen::Vector2d> pixels;   // per frame (u, v)
};

// One arm, one frame: 21 MANO-ordered landmarks with pixel and camera-frame
// metric coordinates. Frames without a detection stay invalid.
struct HandObservation {
  bool valid = false;
  std::array<Eigen::Vector2d, 21> pixels{};
  std::array<geo::Vec3, 21> points{};
};

inline constexpr int kWristLandmark = 0;
inline constexpr int kThumbTipLandmark = 4;
inline constexpr int kIndexTipLandmark = 8;

// Precomputed perception outputs for one demonstration video.
struct DemoBundle {
  CameraModel camera;
  double fps = 30.0;
  std::vector<std::vector<float>> depth;               // [frame] row-major height*width, meters, 0 = invalid
  std::vector<KeypointTrack> tracks;
  std::array<std::vector<HandObservation>, 2> hands;   // [arm][frame]

  std::size_t frame_count() const { return depth.size(); }
  void validate() const;
};

void save_bundle(const DemoBundle& bundle, const std::string& dir);
DemoBundle load_bundle(const std::string& dir);

}  // namespace bax
