#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "augment.hpp"
#include "json_io.hpp"
#include "trajectory.hpp"

namespace bax::data {

inline constexpr int kActionDim = 20;

// Per arm: position (3), first two rotation columns stacked column-major (6),
// gripper (1); arm 0 then arm 1.
std::array<double, kActionDim> encode_action(const BimanualAction& action);

// Inverse of encode_action; the third rotation column is recovered by
// Gram-Schmidt plus a cross product.
BimanualAction decode_action(const std::array<double, kActionDim>& encoded);

struct ExportOptions {
  double sigma = 0.005;           // meters, Gaussian noise on the noisy channel
  double dropout = 0.1;           // per keypoint per frame
  int observation_window = 8;     // T_o, materialized by readers
  int action_horizon = 16;        // H, materialized by readers
  std::uint64_t seed = 0;         // perturbation stream seed
  int demos_per_shard = 256;

  void validate() const;
};

// Fingerprints of the inputs that generated the dataset, embedded in the
// manifest so tampering and mismatched sources are detectable.
struct ExportProvenance {
  std::uint64_t source_demo_hash = 0;
  std::uint64_t spec_hash = 0;
};

// One record per frame, little-endian f32:
//   [N*3 clean | N*3 noisy | N mask | 20 action | 20 prev-action]
// Clean coordinates are the exact augmented states; dropped keypoints carry
// mask 0 with coordinates intact.
void export_dataset(const std::vector<aug::AugmentedDemo>& demos, const std::string& dir,
                    const ExportOptions& options, const ExportProvenance& provenance = {});

struct ImportedDemo {
  StateActionTrajectory traj;                   // clean channel
  std::vector<std::vector<geo::Vec3>> noisy;    // [frame][keypoint]
  std::vector<std::vector<float>> mask;         // [frame][keypoint], 1 = kept
  bool mirrored = false;
};

struct ImportedDataset {
  std::vector<ImportedDemo> demos;
  std::vector<KeypointMeta> keypoints;
  double control_rate_hz = 10.0;
  ExportOptions options;
  std::uint64_t source_demo_hash = 0;
  std::uint64_t spec_hash = 0;
  std::uint64_t seed = 0;
};

ImportedDataset import_dataset(const std::string& dir);

struct DatasetStats {
  std::size_t demo_count = 0;
  std::size_t min_length = 0, max_length = 0;
  double mean_length = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> length_histogram;  // (length bucket, count)
  struct Box {
    geo::Vec3 min, max;
  };
  std::vector<Box> placement_boxes;                 // per object, frame-0 centroids
  std::array<std::vector<int>, 2> gripper_transitions;  // per arm, per demo

  jsonio::json to_json() const;
  std::string to_text() const;
};

DatasetStats dataset_stats(const ImportedDataset& dataset);

}  // namespace bax::data
