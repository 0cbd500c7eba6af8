#include "trajectory.hpp"

#include <cmath>

#include "json_io.hpp"

namespace bax {

using jsonio::json;

void StateActionTrajectory::validate() const {
  if (dt <= 0.0) fail(Errc::validation, "trajectory dt must be positive");
  if (states.size() != actions.size()) fail(Errc::validation, "states/actions frame counts differ");
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (states[t].size() != keypoints.size())
      fail(Errc::validation, "frame " + std::to_string(t) + ": keypoint count mismatch");
    for (const auto& p : states[t]) {
      if (!p.allFinite()) fail(Errc::validation, "frame " + std::to_string(t) + ": non-finite keypoint");
    }
    for (int arm = 0; arm < 2; ++arm) {
      const auto& a = actions[t][arm];
      if (!a.pose.translation.allFinite() || !a.pose.rotation.allFinite())
        fail(Errc::validation, "frame " + std::to_string(t) + ": non-finite action");
      if (!geo::is_rotation(a.pose.rotation, 1e-6))
        fail(Errc::validation, "frame " + std::to_string(t) + ": rotation off SO(3)");
      if (a.gripper != 0.0 && a.gripper != 1.0)
        fail(Errc::validation, "frame " + std::to_string(t) + ": gripper must be 0 or 1");
    }
  }
}

namespace {

json to_json(const StateActionTrajectory& traj) {
  json kps = json::array();
  for (const auto& k : traj.keypoints) {
    kps.push_back({{"id", k.id}, {"label", k.label}, {"group", k.group}, {"object", k.object}});
  }
  json frames = json::array();
  for (std::size_t t = 0; t < traj.length(); ++t) {
    json sts = json::array();
    for (const auto& p : traj.states[t]) sts.push_back(jsonio::vec3_to_json(p));
    json arms = json::array();
    for (int arm = 0; arm < 2; ++arm) {
      const auto& a = traj.actions[t][arm];
      json aj = jsonio::pose_to_json(a.pose);
      aj["gripper"] = a.gripper;
      arms.push_back(aj);
    }
    frames.push_back({{"states", sts}, {"arms", arms}});
  }
  return json{{"dt", traj.dt}, {"keypoints", kps}, {"frames", frames}};
}

}  // namespace

void save_trajectory(const StateActionTrajectory& traj, const std::string& path) {
  jsonio::save_json_file(path, to_json(traj));
}

StateActionTrajectory load_trajectory(const std::string& path) {
  const json j = jsonio::load_json_file(path);
  StateActionTrajectory traj;
  traj.dt = j.at("dt").get<double>();
  for (const auto& k : j.at("keypoints")) {
    KeypointMeta m;
    m.id = k.at("id").get<std::string>();
    m.label = k.value("label", std::string{});
    m.group = k.value("group", 0);
    m.object = k.value("object", 0);
    traj.keypoints.push_back(std::move(m));
  }
  for (const auto& f : j.at("frames")) {
    std::vector<geo::Vec3> sts;
    for (const auto& s : f.at("states")) sts.push_back(jsonio::vec3_from_json(s));
    BimanualAction act;
    const auto& arms = f.at("arms");
    if (arms.size() != 2) fail(Errc::validation, path + ": both arms required per frame");
    for (int arm = 0; arm < 2; ++arm) {
      act[arm].pose = jsonio::pose_from_json(arms[arm]);
      act[arm].gripper = arms[arm].at("gripper").get<double>();
    }
    traj.states.push_back(std::move(sts));
    traj.actions.push_back(act);
  }
  traj.validate();
  return traj;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t trajectory_hash(const StateActionTrajectory& traj) {
  const std::string s = to_json(traj).dump();
  return fnv1a(s.data(), s.size());
}

}  // namespace bax
