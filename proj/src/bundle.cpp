#include "bundle.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "error.hpp"
#include "json_io.hpp"

namespace bax {

namespace fs = std::filesystem;
using jsonio::json;

void CameraModel::validate() const {
  if (fx <= 0.0 || fy <= 0.0) fail(Errc::validation, "camera focal lengths must be positive");
  if (width <= 0 || height <= 0) fail(Errc::validation, "camera size must be positive");
  if (cx <= 0.0 || cx >= width || cy <= 0.0 || cy >= height)
    fail(Errc::validation, "camera principal point outside the image");
  if (!geo::is_rotation(extrinsics.rotation, 1e-6)) fail(Errc::validation, "camera extrinsics rotation off SO(3)");
}

geo::Vec3 CameraModel::backproject(double u, double v, double z) const {
  const geo::Vec3 cam{(u - cx) / fx * z, (v - cy) / fy * z, z};
  return geo::apply(extrinsics, cam);
}

Eigen::Vector2d CameraModel::project(const geo::Vec3& task_point, double* z_out) const {
  const geo::Vec3 cam = geo::apply(geo::invert(extrinsics), task_point);
  if (z_out) *z_out = cam.z();
  return {fx * cam.x() / cam.z() + cx, fy * cam.y() / cam.z() + cy};
}

void DemoBundle::validate() const {
  camera.validate();
  if (fps <= 0.0) fail(Errc::validation, "bundle fps must be positive");
  const std::size_t frames = frame_count();
  if (frames < 2) fail(Errc::validation, "bundle needs at least 2 frames");
  const std::size_t px = static_cast<std::size_t>(camera.width) * camera.height;
  for (std::size_t t = 0; t < frames; ++t) {
    if (depth[t].size() != px) fail(Errc::validation, "depth frame " + std::to_string(t) + " has wrong size");
    for (float d : depth[t]) {
      if (d < 0.0f || !std::isfinite(d)) fail(Errc::validation, "negative or non-finite depth value");
    }
  }
  for (const auto& track : tracks) {
    if (track.pixels.size() != frames)
      fail(Errc::validation, "track " + track.id + " frame count differs from depth");
    if (track.object < 0) fail(Errc::validation, "track " + track.id + " has negative owner");
  }
  for (int arm = 0; arm < 2; ++arm) {
    if (hands[arm].size() != frames)
      fail(Errc::validation, "arm " + std::to_string(arm) + " hand frame count differs from depth");
  }
}

namespace {

std::string depth_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06zu.f32", index);
  return buf;
}

json hand_frame_to_json(const HandObservation& h) {
  if (!h.valid) return nullptr;
  json out = json::array();
  for (int i = 0; i < 21; ++i) {
    out.push_back({h.pixels[i].x(), h.pixels[i].y(), h.points[i].x(), h.points[i].y(), h.points[i].z()});
  }
  return out;
}

HandObservation hand_frame_from_json(const json& j) {
  HandObservation h;
  if (j.is_null()) return h;
  if (!j.is_array() || j.size() != 21) fail(Errc::validation, "hand frames need 21 landmarks");
  h.valid = true;
  for (int i = 0; i < 21; ++i) {
    const auto& row = j[i];
    if (!row.is_array() || row.size() != 5) fail(Errc::validation, "hand landmark rows are [u,v,X,Y,Z]");
    h.pixels[i] = {row[0].get<double>(), row[1].get<double>()};
    h.points[i] = {row[2].get<double>(), row[3].get<double>(), row[4].get<double>()};
  }
  return h;
}

}  // namespace

void save_bundle(const DemoBundle& bundle, const std::string& dir) {
  bundle.validate();
  fs::create_directories(fs::path(dir) / "depth");

  json meta{{"fps", bundle.fps},
            {"camera",
             {{"fx", bundle.camera.fx},
              {"fy", bundle.camera.fy},
              {"cx", bundle.camera.cx},
              {"cy", bundle.camera.cy},
              {"width", bundle.camera.width},
              {"height", bundle.camera.height}}}};
  json ext = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      double v;
      if (r < 3 && c < 3) v = bundle.camera.extrinsics.rotation(r, c);
      else if (r < 3) v = bundle.camera.extrinsics.translation[r];
      else v = (c == 3) ? 1.0 : 0.0;
      ext.push_back(v);
    }
  }
  meta["camera"]["extrinsics"] = ext;
  jsonio::save_json_file((fs::path(dir) / "meta.json").string(), meta);

  for (std::size_t t = 0; t < bundle.frame_count(); ++t) {
    std::ofstream out(fs::path(dir) / "depth" / depth_name(t), std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write depth frame " + std::to_string(t));
    out.write(reinterpret_cast<const char*>(bundle.depth[t].data()),
              static_cast<std::streamsize>(bundle.depth[t].size() * sizeof(float)));
  }

  json tracks = json::array();
  for (const auto& track : bundle.tracks) {
    json px = json::array();
    for (const auto& p : track.pixels) px.push_back({p.x(), p.y()});
    tracks.push_back({{"id", track.id},
                      {"label", track.label},
                      {"group", track.group},
                      {"object", track.object},
                      {"pixels", px}});
  }
  jsonio::save_json_file((fs::path(dir) / "tracks.json").string(), json{{"tracks", tracks}});

  json arms = json::array();
  for (int arm = 0; arm < 2; ++arm) {
    json frames = json::array();
    for (const auto& h : bundle.hands[arm]) frames.push_back(hand_frame_to_json(h));
    arms.push_back(frames);
  }
  jsonio::save_json_file((fs::path(dir) / "hands.json").string(), json{{"arms", arms}});
}

DemoBundle load_bundle(const std::string& dir) {
  DemoBundle bundle;
  const json meta = jsonio::load_json_file((fs::path(dir) / "meta.json").string());
  bundle.fps = meta.at("fps").get<double>();
  const auto& cam = meta.at("camera");
  bundle.camera.fx = cam.at("fx").get<double>();
  bundle.camera.fy = cam.at("fy").get<double>();
  bundle.camera.cx = cam.at("cx").get<double>();
  bundle.camera.cy = cam.at("cy").get<double>();
  bundle.camera.width = cam.at("width").get<int>();
  bundle.camera.height = cam.at("height").get<int>();
  const auto& ext = cam.at("extrinsics");
  if (!ext.is_array() || ext.size() != 16) fail(Errc::validation, "extrinsics must be 16 row-major reals");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) bundle.camera.extrinsics.rotation(r, c) = ext[4 * r + c].get<double>();
    bundle.camera.extrinsics.translation[r] = ext[4 * r + 3].get<double>();
  }

  const std::size_t px = static_cast<std::size_t>(bundle.camera.width) * bundle.camera.height;
  for (std::size_t t = 0;; ++t) {
    const fs::path p = fs::path(dir) / "depth" / depth_name(t);
    if (!fs::exists(p)) break;
    std::ifstream in(p, std::ios::binary);
    std::vector<float> frame(px);
    in.read(reinterpret_cast<char*>(frame.data()), static_cast<std::streamsize>(px * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != px * sizeof(float))
      fail(Errc::validation, "depth frame " + std::to_string(t) + " truncated");
    bundle.depth.push_back(std::move(frame));
  }

  const json tracks = jsonio::load_json_file((fs::path(dir) / "tracks.json").string());
  for (const auto& tj : tracks.at("tracks")) {
    KeypointTrack track;
    track.id = tj.at("id").get<std::string>();
    track.label = tj.value("label", std::string{});
    track.group = tj.value("group", 0);
    track.object = tj.value("object", 0);
    for (const auto& p : tj.at("pixels")) track.pixels.emplace_back(p[0].get<double>(), p[1].get<double>());
    bundle.tracks.push_back(std::move(track));
  }

  const json hands = jsonio::load_json_file((fs::path(dir) / "hands.json").string());
  const auto& arms = hands.at("arms");
  if (arms.size() != 2) fail(Errc::validation, "hands.json must list both arms");
  for (int arm = 0; arm < 2; ++arm) {
    for (const auto& fj : arms[arm]) bundle.hands[arm].push_back(hand_frame_from_json(fj));
  }

  bundle.validate();
  return bundle;
}

}  // namespace bax
