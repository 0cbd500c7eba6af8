#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "error.hpp"
#include "rng.hpp"

namespace bax::data {

namespace fs = std::filesystem;
using jsonio::json;

std::array<double, kActionDim> encode_action(const BimanualAction& action) {
  std::array<double, kActionDim> out{};
  int at = 0;
  for (int arm = 0; arm < 2; ++arm) {
    const auto& pose = action[arm].pose;
    for (int i = 0; i < 3; ++i) out[at++] = pose.translation[i];
    for (int col = 0; col < 2; ++col) {
      for (int row = 0; row < 3; ++row) out[at++] = pose.rotation(row, col);
    }
    out[at++] = action[arm].gripper;
  }
  return out;
}

BimanualAction decode_action(const std::array<double, kActionDim>& encoded) {
  BimanualAction action;
  int at = 0;
  for (int arm = 0; arm < 2; ++arm) {
    geo::Pose pose;
    for (int i = 0; i < 3; ++i) pose.translation[i] = encoded[at++];
    geo::Vec3 c0, c1;
    for (int i = 0; i < 3; ++i) c0[i] = encoded[at++];
    for (int i = 0; i < 3; ++i) c1[i] = encoded[at++];
    if (c0.norm() < geo::kVecEps) fail(Errc::validation, "decode_action: degenerate rotation column");
    c0.normalize();
    c1 -= c1.dot(c0) * c0;
    if (c1.norm() < geo::kVecEps) fail(Errc::validation, "decode_action: collinear rotation columns");
    c1.normalize();
    pose.rotation.col(0) = c0;
    pose.rotation.col(1) = c1;
    pose.rotation.col(2) = c0.cross(c1);
    action[arm].pose = pose;
    action[arm].gripper = encoded[at++];
  }
  return action;
}

void ExportOptions::validate() const {
  if (sigma < 0.0) fail(Errc::validation, "sigma must be non-negative");
  if (dropout < 0.0 || dropout >= 1.0) fail(Errc::validation, "dropout must be in [0, 1)");
  if (observation_window < 1 || action_horizon < 1)
    fail(Errc::validation, "observation window and action horizon must be >= 1");
  if (demos_per_shard < 1) fail(Errc::validation, "demos_per_shard must be positive");
}

namespace {

std::string shard_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shard_%04d.bin", index);
  return buf;
}

std::string hex64(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) { return std::stoull(s, nullptr, 16); }

json pose_json(const geo::Pose& p) { return jsonio::pose_to_json(p); }

json segments_json(const std::vector<aug::AugSegment>& segments) {
  json out = json::array();
  for (const auto& s : segments) {
    out.push_back({{"kind", segment_kind_name(s.kind)},
                   {"stage", s.stage},
                   {"ref", s.ref},
                   {"demo_begin", s.demo_begin},
                   {"demo_end", s.demo_end},
                   {"out_begin", s.out_begin},
                   {"out_end", s.out_end}});
  }
  return out;
}

}  // namespace

void export_dataset(const std::vector<aug::AugmentedDemo>& demos, const std::string& dir,
                    const ExportOptions& options, const ExportProvenance& input_provenance) {
  options.validate();
  if (demos.empty()) fail(Errc::validation, "nothing to export");

  const auto& keypoints = demos.front().traj.keypoints;
  const std::size_t num_kp = keypoints.size();
  const double dt = demos.front().traj.dt;
  for (const auto& demo : demos) {
    if (demo.traj.keypoints.size() != num_kp || std::abs(demo.traj.dt - dt) > 1e-12)
      fail(Errc::inconsistent_demos, "demos disagree on keypoint metadata or control rate");
    for (std::size_t k = 0; k < num_kp; ++k) {
      if (demo.traj.keypoints[k].id != keypoints[k].id)
        fail(Errc::inconsistent_demos, "demos disagree on keypoint identity");
    }
  }

  fs::create_directories(dir);

  json shards = json::array();
  json demo_index = json::array();
  json provenance = json::array();

  int shard_id = 0;
  std::size_t demo_at = 0;
  while (demo_at < demos.size()) {
    const std::size_t end = std::min(demos.size(), demo_at + static_cast<std::size_t>(options.demos_per_shard));
    std::vector<float> payload;
    std::size_t records = 0;

    for (std::size_t d = demo_at; d < end; ++d) {
      const auto& demo = demos[d];
      Rng rng(options.seed, 0x64617461ull ^ static_cast<std::uint64_t>(d));
      std::array<double, kActionDim> prev{};

      demo_index.push_back({{"shard", shard_id},
                            {"record_offset", records},
                            {"length", demo.traj.length()},
                            {"mirrored", demo.provenance.mirrored}});

      for (std::size_t t = 0; t < demo.traj.length(); ++t) {
        for (const auto& p : demo.traj.states[t]) {
          for (int i = 0; i < 3; ++i) payload.push_back(static_cast<float>(p[i]));
        }
        for (const auto& p : demo.traj.states[t]) {
          for (int i = 0; i < 3; ++i) {
            const double noise = options.sigma > 0.0 ? options.sigma * rng.normal() : 0.0;
            payload.push_back(static_cast<float>(p[i] + noise));
          }
        }
        for (std::size_t k = 0; k < num_kp; ++k) {
          payload.push_back(rng.bernoulli(options.dropout) ? 0.0f : 1.0f);
        }
        const auto encoded = encode_action(demo.traj.actions[t]);
        for (double v : encoded) payload.push_back(static_cast<float>(v));
        for (double v : prev) payload.push_back(static_cast<float>(v));
        prev = encoded;
        ++records;
      }

      const auto& prov = demo.provenance;
      json deltas = json::array();
      for (const auto& delta : prov.deltas) deltas.push_back(pose_json(delta));
      provenance.push_back({{"index", prov.index},
                            {"seed", prov.seed},
                            {"mirrored", prov.mirrored},
                            {"resync_padding", {prov.resync_padding[0], prov.resync_padding[1]}},
                            {"terminal_padding", {prov.terminal_padding[0], prov.terminal_padding[1]}},
                            {"deltas", deltas},
                            {"segments", {segments_json(demo.segments[0]), segments_json(demo.segments[1])}}});
    }

    const std::string name = shard_name(shard_id);
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write " + name);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    shards.push_back({{"file", name},
                      {"records", records},
                      {"hash", hex64(fnv1a(payload.data(), payload.size() * sizeof(float)))}});
    ++shard_id;
    demo_at = end;
  }

  json kps = json::array();
  for (const auto& k : keypoints) {
    kps.push_back({{"id", k.id}, {"label", k.label}, {"group", k.group}, {"object", k.object}});
  }

  const json manifest{{"format_version", 1},
                      {"demo_count", demos.size()},
                      {"control_rate_hz", 1.0 / dt},
                      {"action_dim", kActionDim},
                      {"keypoints", kps},
                      {"observation_window", options.observation_window},
                      {"action_horizon", options.action_horizon},
                      {"sigma", options.sigma},
                      {"dropout", options.dropout},
                      {"seed", options.seed},
                      {"shards", shards},
                      {"demos", demo_index},
                      {"provenance",
                       {{"source_demo_hash", hex64(input_provenance.source_demo_hash)},
                        {"spec_hash", hex64(input_provenance.spec_hash)}}}};
  jsonio::save_json_file((fs::path(dir) / "manifest.json").string(), manifest);
  jsonio::save_json_file((fs::path(dir) / "provenance.json").string(), json{{"demos", provenance}});
}

ImportedDataset import_dataset(const std::string& dir) {
  const json manifest = jsonio::load_json_file((fs::path(dir) / "manifest.json").string());
  ImportedDataset dataset;
  dataset.control_rate_hz = manifest.at("control_rate_hz").get<double>();
  dataset.options.sigma = manifest.value("sigma", 0.0);
  dataset.options.dropout = manifest.value("dropout", 0.0);
  dataset.options.observation_window = manifest.value("observation_window", 8);
  dataset.options.action_horizon = manifest.value("action_horizon", 16);
  dataset.options.seed = manifest.value("seed", std::uint64_t{0});
  dataset.seed = dataset.options.seed;
  if (manifest.at("action_dim").get<int>() != kActionDim)
    fail(Errc::validation, "manifest action_dim must be 20");
  for (const auto& k : manifest.at("keypoints")) {
    dataset.keypoints.push_back(
        {k.at("id").get<std::string>(), k.value("label", std::string{}), k.value("group", 0), k.value("object", 0)});
  }
  dataset.source_demo_hash = parse_hex64(manifest.at("provenance").at("source_demo_hash").get<std::string>());
  dataset.spec_hash = parse_hex64(manifest.at("provenance").at("spec_hash").get<std::string>());

  const std::size_t num_kp = dataset.keypoints.size();
  const std::size_t record_floats = num_kp * 7 + 2 * kActionDim;

  std::vector<std::vector<float>> shard_data;
  for (const auto& sj : manifest.at("shards")) {
    const std::string name = sj.at("file").get<std::string>();
    const fs::path path = fs::path(dir) / name;
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::corrupt_shard, name + ": cannot open");
    in.seekg(0, std::ios::end);
    const std::streamsize bytes = in.tellg();
    in.seekg(0);
    const std::size_t expected = sj.at("records").get<std::size_t>() * record_floats * sizeof(float);
    if (static_cast<std::size_t>(bytes) != expected)
      fail(Errc::corrupt_shard,
           name + ": size " + std::to_string(bytes) + " != expected " + std::to_string(expected));
    std::vector<float> data(static_cast<std::size_t>(bytes) / sizeof(float));
    in.read(reinterpret_cast<char*>(data.data()), bytes);
    const std::uint64_t hash = fnv1a(data.data(), data.size() * sizeof(float));
    if (hex64(hash) != sj.at("hash").get<std::string>())
      fail(Errc::corrupt_shard, name + ": content hash mismatch");
    shard_data.push_back(std::move(data));
  }

  for (const auto& dj : manifest.at("demos")) {
    const int shard = dj.at("shard").get<int>();
    const std::size_t offset = dj.at("record_offset").get<std::size_t>();
    const std::size_t length = dj.at("length").get<std::size_t>();
    if (shard < 0 || static_cast<std::size_t>(shard) >= shard_data.size())
      fail(Errc::corrupt_shard, "demo references a missing shard");
    const auto& data = shard_data[static_cast<std::size_t>(shard)];
    if ((offset + length) * record_floats > data.size())
      fail(Errc::corrupt_shard, "demo record range out of bounds at offset " + std::to_string(offset));

    ImportedDemo demo;
    demo.mirrored = dj.value("mirrored", false);
    demo.traj.dt = 1.0 / dataset.control_rate_hz;
    demo.traj.keypoints = dataset.keypoints;
    for (std::size_t t = 0; t < length; ++t) {
      const float* rec = data.data() + (offset + t) * record_floats;
      std::vector<geo::Vec3> clean(num_kp), noisy(num_kp);
      std::vector<float> mask(num_kp);
      for (std::size_t k = 0; k < num_kp; ++k) {
        clean[k] = geo::Vec3(rec[3 * k], rec[3 * k + 1], rec[3 * k + 2]);
      }
      const float* noisy_base = rec + 3 * num_kp;
      for (std::size_t k = 0; k < num_kp; ++k) {
        noisy[k] = geo::Vec3(noisy_base[3 * k], noisy_base[3 * k + 1], noisy_base[3 * k + 2]);
      }
      const float* mask_base = rec + 6 * num_kp;
      for (std::size_t k = 0; k < num_kp; ++k) mask[k] = mask_base[k];

      std::array<double, kActionDim> encoded{};
      const float* action_base = rec + 7 * num_kp;
      for (int i = 0; i < kActionDim; ++i) encoded[static_cast<std::size_t>(i)] = action_base[i];

      demo.traj.states.push_back(std::move(clean));
      demo.noisy.push_back(std::move(noisy));
      demo.mask.push_back(std::move(mask));
      demo.traj.actions.push_back(decode_action(encoded));
    }
    dataset.demos.push_back(std::move(demo));
  }
  return dataset;
}

json DatasetStats::to_json() const {
  json boxes = json::array();
  for (const auto& box : placement_boxes) {
    boxes.push_back({{"min", jsonio::vec3_to_json(box.min)}, {"max", jsonio::vec3_to_json(box.max)}});
  }
  json hist = json::array();
  for (const auto& [length, count] : length_histogram) hist.push_back({{"length", length}, {"count", count}});
  json transitions = json::array();
  for (int arm = 0; arm < 2; ++arm) {
    json arm_counts = json::array();
    for (int c : gripper_transitions[arm]) arm_counts.push_back(c);
    transitions.push_back(arm_counts);
  }
  return json{{"demo_count", demo_count},
              {"min_length", min_length},
              {"max_length", max_length},
              {"mean_length", mean_length},
              {"length_histogram", hist},
              {"placement_boxes", boxes},
              {"gripper_transitions", transitions}};
}

std::string DatasetStats::to_text() const {
  std::ostringstream os;
  os << "demos: " << demo_count << "\n";
  os << "length: min " << min_length << "  max " << max_length << "  mean " << mean_length << "\n";
  for (std::size_t k = 0; k < placement_boxes.size(); ++k) {
    const auto& b = placement_boxes[k];
    os << "object " << k + 1 << " placement box: [" << b.min.x() << ", " << b.min.y() << ", " << b.min.z()
       << "] .. [" << b.max.x() << ", " << b.max.y() << ", " << b.max.z() << "]\n";
  }
  for (int arm = 0; arm < 2; ++arm) {
    std::map<int, int> counts;
    for (int c : gripper_transitions[arm]) counts[c]++;
    os << "arm " << arm << " gripper transitions:";
    for (const auto& [c, n] : counts) os << "  " << c << "x" << n;
    os << "\n";
  }
  return os.str();
}

DatasetStats dataset_stats(const ImportedDataset& dataset) {
  DatasetStats stats;
  stats.demo_count = dataset.demos.size();
  if (dataset.demos.empty()) return stats;

  stats.min_length = dataset.demos.front().traj.length();
  stats.max_length = stats.min_length;
  double total = 0.0;
  std::map<std::size_t, std::size_t> hist;
  for (const auto& demo : dataset.demos) {
    const std::size_t length = demo.traj.length();
    stats.min_length = std::min(stats.min_length, length);
    stats.max_length = std::max(stats.max_length, length);
    total += static_cast<double>(length);
    hist[length]++;
  }
  stats.mean_length = total / static_cast<double>(dataset.demos.size());
  for (const auto& [length, count] : hist) stats.length_histogram.emplace_back(length, count);

  int num_objects = 0;
  for (const auto& k : dataset.keypoints) num_objects = std::max(num_objects, k.object);
  const auto owned = ownership_from_metadata(dataset.keypoints, num_objects);
  for (int k = 0; k < num_objects; ++k) {
    DatasetStats::Box box{geo::Vec3::Constant(1e18), geo::Vec3::Constant(-1e18)};
    for (const auto& demo : dataset.demos) {
      if (owned[static_cast<std::size_t>(k)].empty()) continue;
      geo::Vec3 centroid = geo::Vec3::Zero();
      for (int idx : owned[static_cast<std::size_t>(k)]) centroid += demo.traj.states[0][static_cast<std::size_t>(idx)];
      centroid /= static_cast<double>(owned[static_cast<std::size_t>(k)].size());
      box.min = box.min.cwiseMin(centroid);
      box.max = box.max.cwiseMax(centroid);
    }
    stats.placement_boxes.push_back(box);
  }

  for (const auto& demo : dataset.demos) {
    for (int arm = 0; arm < 2; ++arm) {
      int count = 0;
      for (std::size_t t = 1; t < demo.traj.length(); ++t) {
        if (demo.traj.actions[t][arm].gripper != demo.traj.actions[t - 1][arm].gripper) ++count;
      }
      stats.gripper_transitions[arm].push_back(count);
    }
  }
  return stats;
}

}  // namespace bax::data
