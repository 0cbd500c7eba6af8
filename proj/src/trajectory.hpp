#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace bax {

struct KeypointMeta {
  std::string id;
  std::string label;
  int group = 0;
  int object = 0;  // owning object index in [1, K]; 0 = unowned
};

struct ArmAction {
  geo::Pose pose;
  double gripper = 0.0;  // 0 open, 1 closed
};

using BimanualAction = std::array<ArmAction, 2>;

// Time-indexed keypoint states (task frame, meters) plus bimanual actions.
struct StateActionTrajectory {
  double dt = 0.1;
  std::vector<KeypointMeta> keypoints;
  std::vector<std::vector<geo::Vec3>> states;  // [frame][keypoint]
  std::vector<BimanualAction> actions;         // [frame][arm]

  std::size_t length() const { return actions.size(); }
  std::size_t num_keypoints() const { return keypoints.size(); }

  // Throws Errc::validation on shape mismatches, non-finite values, or
  // rotations off SO(3).
  void validate() const;
};

void save_trajectory(const StateActionTrajectory& traj, const std::string& path);
StateActionTrajectory load_trajectory(const std::string& path);

// FNV-1a over the canonical JSON encoding; used for dataset provenance.
std::uint64_t trajectory_hash(const StateActionTrajectory& traj);

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace bax
