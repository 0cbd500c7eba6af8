#pragma once

#include <string>
#include <vector>

#include "augment.hpp"
#include "json_io.hpp"
#include "synthetic.hpp"

namespace bax::verify {

struct CheckResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;  // worst-case residual, units per check
  int frame = -1;      // first offending output frame, -1 when clean
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  std::string to_text() const;
  jsonio::json to_json() const;
};

// Runs the augmentation invariants (equivariance, sync fidelity, continuity,
// rigidity, gripper conservation, workspace bounds) against one augmented
// demo and its source.
VerificationReport check_invariants(const aug::AugmentedDemo& demo, const StateActionTrajectory& source,
                                    const ObjectConfiguration& config, const AugmentationSpec& spec);

struct DatasetReport {
  std::size_t total = 0;
  std::size_t passed = 0;
  std::vector<std::pair<int, VerificationReport>> failures;  // by demo index within the dataset

  double pass_rate() const { return total == 0 ? 1.0 : static_cast<double>(passed) / total; }
  bool all_passed() const { return passed == total; }
};

DatasetReport check_dataset(const std::vector<aug::AugmentedDemo>& demos, const StateActionTrajectory& source,
                            const ObjectConfiguration& config, const AugmentationSpec& spec, int threads = 1);

// Kinematic point-mass replay: a closing gripper within grasp_eps of an
// object's nearest keypoint attaches it; releases settle the object onto the
// support plane unless the other arm still holds it.
struct ReplayResult {
  bool success = false;
  std::vector<geo::Vec3> final_keypoints;
};

ReplayResult replay(const StateActionTrajectory& traj, const synth::SyntheticTask& task, double grasp_eps);

struct ReplayStats {
  std::size_t total = 0;
  std::size_t successes = 0;
  double rate() const { return total == 0 ? 1.0 : static_cast<double>(successes) / total; }
};

ReplayStats replay_dataset(const std::vector<aug::AugmentedDemo>& demos, const synth::SyntheticTask& task,
                           double grasp_eps, int threads = 1);

// Standalone rigid-body keypoint predictor; shares its implementation with
// the augmentation-side propagation, so predictions agree bit for bit.
std::vector<std::vector<geo::Vec3>> keypoint_forward_model(const std::vector<BimanualAction>& actions,
                                                           const GraspEventLog& events,
                                                           const std::vector<geo::Vec3>& initial_keypoints,
                                                           const std::vector<std::vector<int>>& owned);

}  // namespace bax::verify
