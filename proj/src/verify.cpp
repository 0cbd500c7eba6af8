#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "error.hpp"

namespace bax::verify {

using jsonio::json;

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string VerificationReport::to_text() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.passed ? "PASS" : "FAIL") << "  " << c.name << "  worst=" << c.worst;
    if (c.frame >= 0) os << "  frame=" << c.frame;
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  return os.str();
}

json VerificationReport::to_json() const {
  json checks_json = json::array();
  for (const auto& c : checks) {
    checks_json.push_back({{"name", c.name},
                           {"passed", c.passed},
                           {"worst_residual", c.worst},
                           {"frame", c.frame},
                           {"detail", c.detail}});
  }
  return json{{"passed", passed()}, {"checks", checks_json}};
}

namespace {

constexpr double kTol = 1e-9;

void update(CheckResult& check, double residual, int frame) {
  if (residual > check.worst) {
    check.worst = residual;
    if (residual > kTol) {
      check.passed = false;
      if (check.frame < 0) check.frame = frame;
    }
  }
}

double pose_gap(const geo::Pose& a, const geo::Pose& b) {
  return std::max((a.translation - b.translation).norm(),
                  geo::rotation_angle_between(a.rotation, b.rotation));
}

}  // namespace

VerificationReport check_invariants(const aug::AugmentedDemo& demo, const StateActionTrajectory& source,
                                    const ObjectConfiguration& config, const AugmentationSpec& spec) {
  VerificationReport report;
  const auto& traj = demo.traj;
  const auto& prov = demo.provenance;

  // Compare against the branch actually used for assembly.
  const StateActionTrajectory base =
      prov.mirrored ? ground::mirror_trajectory(source, spec.symmetry_plane) : source;
  const ObjectConfiguration base_config =
      prov.mirrored ? ground::mirror_config(config, spec.symmetry_plane) : config;

  CheckResult equivariance{"equivariance"};
  CheckResult sync_fidelity{"sync_fidelity"};
  CheckResult continuity{"continuity"};
  CheckResult rigidity{"rigidity"};
  CheckResult gripper{"gripper_conservation"};
  CheckResult bounds{"workspace_bounds"};

  // Equivariance: skill steps keep the demo's EE pose relative to the
  // assigned object frame.
  for (int arm = 0; arm < 2; ++arm) {
    for (const auto& seg : demo.segments[arm]) {
      if ((seg.kind != SegmentKind::skill_async && seg.kind != SegmentKind::skill_sync) || seg.ref <= 0)
        continue;
      const geo::Pose& delta = prov.deltas[static_cast<std::size_t>(seg.ref - 1)];
      const geo::Pose obj_src = base_config.frames[static_cast<std::size_t>(seg.ref - 1)];
      const geo::Pose obj_aug = geo::compose(delta, obj_src);
      const geo::Pose inv_src = geo::invert(obj_src);
      const geo::Pose inv_aug = geo::invert(obj_aug);
      for (int i = 0; i < seg.out_end - seg.out_begin; ++i) {
        const geo::Pose d_src = geo::compose(inv_src, base.actions[seg.demo_begin + i][arm].pose);
        const geo::Pose d_aug = geo::compose(inv_aug, traj.actions[seg.out_begin + i][arm].pose);
        update(equivariance, pose_gap(d_src, d_aug), seg.out_begin + i);
      }
    }
  }

  // Sync fidelity: the inter-EE relative pose at every sync segment start
  // matches the demo's.
  for (const auto& seg : demo.segments[0]) {
    if (seg.kind != SegmentKind::skill_sync) continue;
    const geo::Pose rel_aug =
        geo::compose(geo::invert(traj.actions[seg.out_begin][0].pose), traj.actions[seg.out_begin][1].pose);
    const geo::Pose rel_src =
        geo::compose(geo::invert(base.actions[seg.demo_begin][0].pose), base.actions[seg.demo_begin][1].pose);
    update(sync_fidelity, pose_gap(rel_aug, rel_src), seg.out_begin);
  }

  // Continuity: planned steps stay under v*dt; demo-inherited skill steps
  // stay under the demo's own worst step.
  std::array<double, 2> demo_max_step{0.0, 0.0};
  for (int arm = 0; arm < 2; ++arm) {
    for (std::size_t t = 1; t < base.length(); ++t) {
      demo_max_step[arm] = std::max(
          demo_max_step[arm],
          (base.actions[t][arm].pose.translation - base.actions[t - 1][arm].pose.translation).norm());
    }
  }
  for (int arm = 0; arm < 2; ++arm) {
    // Steps inside one skill segment are rigid copies of demo steps; steps
    // crossing into a skill segment may be the demo's own junction when no
    // motion was planned between differently-mapped segments.
    std::vector<int> segment_of(traj.length(), -1);
    std::vector<double> entry_bound(traj.length(), 0.0);
    for (std::size_t s = 0; s < demo.segments[arm].size(); ++s) {
      const auto& seg = demo.segments[arm][s];
      const bool skill = seg.kind == SegmentKind::skill_async || seg.kind == SegmentKind::skill_sync;
      for (int t = seg.out_begin; t < seg.out_end; ++t) {
        if (skill) segment_of[static_cast<std::size_t>(t)] = static_cast<int>(s);
      }
      if (skill && seg.demo_begin > 0 && seg.out_begin < static_cast<int>(traj.length())) {
        entry_bound[static_cast<std::size_t>(seg.out_begin)] =
            (base.actions[static_cast<std::size_t>(seg.demo_begin)][arm].pose.translation -
             base.actions[static_cast<std::size_t>(seg.demo_begin - 1)][arm].pose.translation)
                .norm();
      }
    }
    for (std::size_t t = 1; t < traj.length(); ++t) {
      const double step =
          (traj.actions[t][arm].pose.translation - traj.actions[t - 1][arm].pose.translation).norm();
      double bound = spec.velocity * spec.dt;
      if (segment_of[t] >= 0 && segment_of[t] == segment_of[t - 1]) {
        bound = demo_max_step[arm];
      } else {
        bound = std::max(bound, entry_bound[t]);
      }
      update(continuity, std::max(0.0, step - bound), static_cast<int>(t));
    }
  }

  // Rigidity: per-object pairwise keypoint distances stay constant.
  for (std::size_t k = 0; k < config.owned.size(); ++k) {
    const auto& indices = config.owned[k];
    for (std::size_t a = 0; a < indices.size(); ++a) {
      for (std::size_t b = a + 1; b < indices.size(); ++b) {
        const double ref =
            (traj.states[0][static_cast<std::size_t>(indices[a])] - traj.states[0][static_cast<std::size_t>(indices[b])]).norm();
        for (std::size_t t = 1; t < traj.length(); ++t) {
          const double now =
              (traj.states[t][static_cast<std::size_t>(indices[a])] - traj.states[t][static_cast<std::size_t>(indices[b])]).norm();
          update(rigidity, std::abs(now - ref), static_cast<int>(t));
        }
      }
    }
  }

  // Gripper conservation: transition counts per arm match the assembly base.
  for (int arm = 0; arm < 2; ++arm) {
    auto transitions = [arm](const StateActionTrajectory& t) {
      int count = 0;
      for (std::size_t i = 1; i < t.length(); ++i) {
        if (t.actions[i][arm].gripper != t.actions[i - 1][arm].gripper) ++count;
      }
      return count;
    };
    const int diff = std::abs(transitions(traj) - transitions(base));
    if (diff > 0) {
      gripper.passed = false;
      gripper.detail = "arm " + std::to_string(arm) + " transition count differs";
    }
    gripper.worst = std::max(gripper.worst, static_cast<double>(diff));
  }

  // Bounds: augmented object centroids start inside the workspace box.
  for (std::size_t k = 0; k < config.owned.size(); ++k) {
    const auto& indices = config.owned[k];
    if (indices.empty()) continue;
    geo::Vec3 centroid = geo::Vec3::Zero();
    for (int i : indices) centroid += traj.states[0][static_cast<std::size_t>(i)];
    centroid /= static_cast<double>(indices.size());
    geo::Vec3 violation = geo::Vec3::Zero();
    violation = violation.cwiseMax(spec.workspace.box_min - centroid);
    violation = violation.cwiseMax(centroid - spec.workspace.box_max);
    update(bounds, violation.maxCoeff(), 0);
  }

  report.checks = {equivariance, sync_fidelity, continuity, rigidity, gripper, bounds};
  return report;
}

DatasetReport check_dataset(const std::vector<aug::AugmentedDemo>& demos, const StateActionTrajectory& source,
                            const ObjectConfiguration& config, const AugmentationSpec& spec, int threads) {
  DatasetReport report;
  report.total = demos.size();
  if (threads < 1) threads = 1;

  std::vector<unsigned char> ok(demos.size(), 0);
  std::vector<VerificationReport> reports(demos.size());
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      reports[i] = check_invariants(demos[i], source, config, spec);
      ok[i] = reports[i].passed() ? 1 : 0;
    }
  };
  if (threads == 1 || demos.size() < 2) {
    worker(0, demos.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (demos.size() + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const std::size_t begin = static_cast<std::size_t>(w) * chunk;
      if (begin >= demos.size()) break;
      pool.emplace_back(worker, begin, std::min(demos.size(), begin + chunk));
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < demos.size(); ++i) {
    if (ok[i]) ++report.passed;
    else report.failures.emplace_back(static_cast<int>(i), reports[i]);
  }
  return report;
}

ReplayResult replay(const StateActionTrajectory& traj, const synth::SyntheticTask& task, double grasp_eps) {
  if (traj.num_keypoints() != task.initial_keypoints.size())
    fail(Errc::validation, "trajectory keypoint count does not match task '" + task.id + "'");
  const auto& owned = task.config.owned;
  const std::size_t num_objects = owned.size();

  struct Attachment {
    bool active = false;
    int arm = -1;
    geo::Pose grasp_inverse;
    std::vector<geo::Vec3> at_grasp;
  };
  std::vector<Attachment> attachments(num_objects);
  std::vector<geo::Vec3> kps = traj.states[0];

  auto object_of = [&](std::size_t kp_index) {
    for (std::size_t k = 0; k < num_objects; ++k) {
      for (int i : owned[k]) {
        if (static_cast<std::size_t>(i) == kp_index) return static_cast<int>(k);
      }
    }
    return -1;
  };

  for (std::size_t t = 1; t < traj.length(); ++t) {
    for (std::size_t k = 0; k < num_objects; ++k) {
      auto& att = attachments[k];
      if (!att.active) continue;
      const geo::Pose motion = geo::compose(traj.actions[t][att.arm].pose, att.grasp_inverse);
      for (std::size_t i = 0; i < owned[k].size(); ++i) {
        kps[static_cast<std::size_t>(owned[k][i])] = geo::apply(motion, att.at_grasp[i]);
      }
    }

    for (int arm = 0; arm < 2; ++arm) {
      const double prev = traj.actions[t - 1][arm].gripper;
      const double curr = traj.actions[t][arm].gripper;
      if (curr == prev) continue;
      if (curr > prev) {
        // Closing: attach the object owning the nearest keypoint, if near enough.
        const geo::Vec3 ee = traj.actions[t][arm].pose.translation;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_kp = 0;
        for (std::size_t i = 0; i < kps.size(); ++i) {
          const double d = (kps[i] - ee).norm();
          if (d < best) {
            best = d;
            best_kp = i;
          }
        }
        const int k = best_kp < kps.size() ? object_of(best_kp) : -1;
        if (k >= 0 && best <= grasp_eps) {
          auto& att = attachments[static_cast<std::size_t>(k)];
          att.active = true;
          att.arm = arm;
          att.grasp_inverse = geo::invert(traj.actions[t][arm].pose);
          att.at_grasp.clear();
          for (int i : owned[static_cast<std::size_t>(k)]) att.at_grasp.push_back(kps[static_cast<std::size_t>(i)]);
        }
      } else {
        // Opening: detach anything this arm holds and settle it onto the support.
        for (std::size_t k = 0; k < num_objects; ++k) {
          auto& att = attachments[k];
          if (!att.active || att.arm != arm) continue;
          att.active = false;
          double min_z = std::numeric_limits<double>::infinity();
          for (int i : owned[k]) min_z = std::min(min_z, kps[static_cast<std::size_t>(i)].z());
          const double dz = task.support_z - min_z;
          for (int i : owned[k]) kps[static_cast<std::size_t>(i)].z() += dz;
        }
      }
    }
  }

  ReplayResult result;
  result.final_keypoints = std::move(kps);
  result.success = synth::evaluate_success(task, result.final_keypoints);
  return result;
}

ReplayStats replay_dataset(const std::vector<aug::AugmentedDemo>& demos, const synth::SyntheticTask& task,
                           double grasp_eps, int threads) {
  ReplayStats stats;
  stats.total = demos.size();
  if (threads < 1) threads = 1;
  std::vector<unsigned char> ok(demos.size(), 0);
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      ok[i] = replay(demos[i].traj, task, grasp_eps).success ? 1 : 0;
    }
  };
  if (threads == 1 || demos.size() < 2) {
    worker(0, demos.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (demos.size() + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const std::size_t begin = static_cast<std::size_t>(w) * chunk;
      if (begin >= demos.size()) break;
      pool.emplace_back(worker, begin, std::min(demos.size(), begin + chunk));
    }
    for (auto& t : pool) t.join();
  }
  for (auto v : ok) stats.successes += v;
  return stats;
}

std::vector<std::vector<geo::Vec3>> keypoint_forward_model(const std::vector<BimanualAction>& actions,
                                                           const GraspEventLog& events,
                                                           const std::vector<geo::Vec3>& initial_keypoints,
                                                           const std::vector<std::vector<int>>& owned) {
  return aug::propagate_keypoints(actions, events, initial_keypoints, owned);
}

}  // namespace bax::verify
