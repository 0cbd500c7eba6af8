#include "parse.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "spline.hpp"

namespace bax::parse {

namespace {

double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

double robust_window_depth(const std::vector<float>& depth_frame, int width, int height, double u, double v,
                           int window) {
  if (window < 1 || window % 2 == 0) fail(Errc::invalid_argument, "depth window must be odd and >= 1");
  const int cu = static_cast<int>(std::lround(u));
  const int cv = static_cast<int>(std::lround(v));
  const int r = window / 2;

  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(window) * window);
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const int x = cu + dx;
      const int y = cv + dy;
      if (x < 0 || x >= width || y < 0 || y >= height) continue;
      const float d = depth_frame[static_cast<std::size_t>(y) * width + x];
      if (d > 0.0f && std::isfinite(d)) samples.push_back(d);
    }
  }
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();

  std::vector<double> work = samples;
  const double med = median_inplace(work);
  std::vector<double> dev;
  dev.reserve(samples.size());
  for (double d : samples) dev.push_back(std::abs(d - med));
  const double mad = median_inplace(dev);

  std::vector<double> kept;
  for (double d : samples) {
    if (std::abs(d - med) <= 3.0 * mad) kept.push_back(d);
  }
  if (kept.empty()) return med;
  return median_inplace(kept);
}

Track3d backproject_track(const KeypointTrack& track, const std::vector<std::vector<float>>& depth,
                          const CameraModel& camera, int window) {
  const std::size_t frames = depth.size();
  if (track.pixels.size() != frames) fail(Errc::validation, "track " + track.id + ": frame count mismatch");

  Track3d out;
  out.points.assign(frames, geo::Vec3::Zero());
  out.interpolated.assign(frames, true);

  std::vector<std::size_t> valid;
  for (std::size_t t = 0; t < frames; ++t) {
    const auto& px = track.pixels[t];
    const double z = robust_window_depth(depth[t], camera.width, camera.height, px.x(), px.y(), window);
    if (std::isnan(z)) continue;
    out.points[t] = camera.backproject(px.x(), px.y(), z);
    out.interpolated[t] = false;
    valid.push_back(t);
  }
  if (valid.empty()) fail(Errc::all_depth_invalid, "track " + track.id + ": no valid depth in any frame");

  // Fill gaps by linear interpolation between the nearest valid neighbours;
  // hold the boundary value before the first / after the last valid frame.
  for (std::size_t t = 0; t < frames; ++t) {
    if (!out.interpolated[t]) continue;
    const auto next = std::lower_bound(valid.begin(), valid.end(), t);
    if (next == valid.begin()) {
      out.points[t] = out.points[valid.front()];
    } else if (next == valid.end()) {
      out.points[t] = out.points[valid.back()];
    } else {
      const std::size_t b = *next;
      const std::size_t a = *(next - 1);
      const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
      out.points[t] = (1.0 - w) * out.points[a] + w * out.points[b];
    }
  }
  return out;
}

geo::Pose hand_to_ee(const HandFrame& hand) {
  const geo::Vec3 midpoint = 0.5 * (hand.thumb_tip() + hand.index_tip());
  const geo::Vec3 closing = hand.index_tip() - hand.thumb_tip();
  const geo::Vec3 approach = midpoint - hand.wrist();
  if (closing.norm() <= geo::kVecEps || approach.norm() <= geo::kVecEps)
    fail(Errc::degenerate_hand, "hand landmarks give a degenerate gripper frame");

  const geo::Vec3 z = approach.normalized();
  geo::Vec3 x = closing - closing.dot(z) * z;
  if (x.norm() <= geo::kVecEps) fail(Errc::degenerate_hand, "closing axis parallel to approach axis");
  x.normalize();

  geo::Pose ee;
  ee.translation = midpoint;
  ee.rotation.col(0) = x;
  ee.rotation.col(1) = z.cross(x);
  ee.rotation.col(2) = z;
  return ee;
}

std::vector<double> gripper_signal(const std::vector<std::optional<HandFrame>>& hands, double close_thresh,
                                   double open_thresh) {
  if (!(open_thresh > close_thresh && close_thresh > 0.0))
    fail(Errc::invalid_argument, "gripper thresholds need open > close > 0");
  std::vector<double> out;
  out.reserve(hands.size());
  double state = 0.0;
  for (const auto& hand : hands) {
    if (hand) {
      const double gap = (hand->index_tip() - hand->thumb_tip()).norm();
      if (gap < close_thresh) state = 1.0;
      else if (gap > open_thresh) state = 0.0;
    }
    out.push_back(state);
  }
  return out;
}

namespace {

// One detection pass: flags known-bad frames, reach failures, and frames
// whose displacement from the last accepted frame exceeds the jump budget.
std::vector<bool> find_invalid(const std::vector<geo::Pose>& poses, const std::vector<bool>& known_invalid,
                               const ReachPredicate& reach, int arm, double v_jump, double dt) {
  const std::size_t n = poses.size();
  std::vector<bool> invalid(n, false);
  for (std::size_t t = 0; t < n; ++t) {
    invalid[t] = known_invalid[t] || !reach(arm, poses[t]);
  }
  std::size_t last_ok = 0;
  for (std::size_t t = 1; t < n; ++t) {
    if (invalid[t]) continue;
    if (invalid[last_ok]) { last_ok = t; continue; }
    const double budget = v_jump * dt * static_cast<double>(t - last_ok);
    if ((poses[t].translation - poses[last_ok].translation).norm() > budget) {
      invalid[t] = true;
    } else {
      last_ok = t;
    }
  }
  return invalid;
}

}  // namespace

RepairResult repair_trajectory(const std::vector<geo::Pose>& poses, const std::vector<bool>& known_invalid,
                               const ReachPredicate& reach, int arm, double v_jump, double dt) {
  const std::size_t n = poses.size();
  if (n < 2) fail(Errc::invalid_argument, "repair needs at least 2 frames");
  if (known_invalid.size() != n) fail(Errc::invalid_argument, "validity mask size mismatch");

  std::vector<bool> bad = find_invalid(poses, known_invalid, reach, arm, v_jump, dt);
  RepairResult result{poses, std::vector<bool>(n, false)};

  const std::vector<bool> no_priors(n, false);
  for (int pass = 0; pass < 8; ++pass) {
    const std::size_t bad_count = static_cast<std::size_t>(std::count(bad.begin(), bad.end(), true));
    if (bad_count == 0) return result;
    if (bad.front() || bad.back())
      fail(Errc::unrepairable_trajectory, "arm " + std::to_string(arm) + ": endpoint frames are invalid");
    if (2 * bad_count > n)
      fail(Errc::unrepairable_trajectory, "arm " + std::to_string(arm) + ": " + std::to_string(bad_count) +
                                              "/" + std::to_string(n) + " frames invalid");

    // Valid frames keep their original values; bad frames are synthesized from
    // the spline through the valid knots.
    std::vector<double> knots_t;
    std::vector<std::size_t> knots_idx;
    for (std::size_t t = 0; t < n; ++t) {
      if (!bad[t]) {
        knots_t.push_back(static_cast<double>(t) * dt);
        knots_idx.push_back(t);
      }
    }
    std::array<std::vector<double>, 3> channels;
    for (std::size_t i : knots_idx) {
      for (int c = 0; c < 3; ++c) channels[c].push_back(poses[i].translation[c]);
    }
    const CubicSpline sx(knots_t, channels[0]);
    const CubicSpline sy(knots_t, channels[1]);
    const CubicSpline sz(knots_t, channels[2]);

    for (std::size_t t = 0; t < n; ++t) {
      if (!bad[t]) {
        result.poses[t] = poses[t];
        result.replaced[t] = false;
        continue;
      }
      const double tt = static_cast<double>(t) * dt;
      geo::Pose fixed;
      fixed.translation = {sx(tt), sy(tt), sz(tt)};
      const auto next = std::lower_bound(knots_idx.begin(), knots_idx.end(), t);
      const std::size_t b = *next;
      const std::size_t a = *(next - 1);
      fixed.rotation = geo::interpolate_pose(poses[a], poses[b],
                                             static_cast<double>(t - a) / static_cast<double>(b - a))
                           .rotation;
      result.poses[t] = fixed;
      result.replaced[t] = true;
    }

    const std::vector<bool> still = find_invalid(result.poses, no_priors, reach, arm, v_jump, dt);
    bool progress = false;
    bool clean = true;
    for (std::size_t t = 0; t < n; ++t) {
      if (still[t]) {
        clean = false;
        if (!bad[t]) {
          bad[t] = true;
          progress = true;
        }
      }
    }
    if (clean) return result;
    if (!progress) break;  // synthesized values themselves violate; widening won't help
  }

  fail(Errc::unrepairable_trajectory, "arm " + std::to_string(arm) + ": repair did not converge");
}

std::vector<std::size_t> resample_indices(std::size_t frame_count, double fps, double target_rate_hz) {
  if (fps <= 0.0 || target_rate_hz <= 0.0) fail(Errc::invalid_argument, "rates must be positive");
  const double stride = fps / target_rate_hz;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0;; ++i) {
    const auto j = static_cast<std::size_t>(std::llround(static_cast<double>(i) * stride));
    if (j >= frame_count) break;
    idx.push_back(j);
  }
  return idx;
}

StateActionTrajectory parse_demo(const DemoBundle& bundle, const ParseOptions& options) {
  bundle.validate();
  const std::size_t frames = bundle.frame_count();
  const double src_dt = 1.0 / bundle.fps;

  // Keypoint states.
  std::vector<Track3d> tracks3d;
  tracks3d.reserve(bundle.tracks.size());
  for (const auto& track : bundle.tracks) {
    tracks3d.push_back(backproject_track(track, bundle.depth, bundle.camera, options.depth_window));
  }

  // Hand streams: lift HaMeR points to the task frame, then anchor each frame
  // on the wrist's back-projected depth so the whole hand shares the sensor's
  // metric scale.
  std::array<std::vector<std::optional<HandFrame>>, 2> hands;
  for (int arm = 0; arm < 2; ++arm) {
    hands[arm].assign(frames, std::nullopt);
    bool any = false;
    for (std::size_t t = 0; t < frames; ++t) {
      const HandObservation& obs = bundle.hands[arm][t];
      if (!obs.valid) continue;
      HandFrame frame;
      for (int i = 0; i < 21; ++i) frame.points[i] = geo::apply(bundle.camera.extrinsics, obs.points[i]);
      const auto& wrist_px = obs.pixels[kWristLandmark];
      const double wrist_z = robust_window_depth(bundle.depth[t], bundle.camera.width, bundle.camera.height,
                                                 wrist_px.x(), wrist_px.y(), options.depth_window);
      if (!std::isnan(wrist_z)) {
        const geo::Vec3 anchored = bundle.camera.backproject(wrist_px.x(), wrist_px.y(), wrist_z);
        const geo::Vec3 shift = anchored - frame.points[kWristLandmark];
        for (auto& p : frame.points) p += shift;
      }
      hands[arm][t] = frame;
      any = true;
    }
    if (!any) fail(Errc::missing_hand, "arm " + std::to_string(arm) + ": no hand detected in any frame");
  }

  ReachPredicate reach;
  if (options.workspace) {
    const WorkspaceGeometry ws = *options.workspace;
    reach = [ws](int arm, const geo::Pose& p) { return ws.reachable(arm, p.translation); };
  } else {
    reach = [](int, const geo::Pose&) { return true; };
  }

  std::array<std::vector<geo::Pose>, 2> ee;
  std::array<std::vector<double>, 2> grip;
  for (int arm = 0; arm < 2; ++arm) {
    std::vector<geo::Pose> raw(frames);
    std::vector<bool> missing(frames, false);
    for (std::size_t t = 0; t < frames; ++t) {
      if (hands[arm][t]) {
        raw[t] = hand_to_ee(*hands[arm][t]);
      } else {
        missing[t] = true;
      }
    }
    auto repaired = repair_trajectory(raw, missing, reach, arm, options.v_jump, src_dt);
    ee[arm] = std::move(repaired.poses);
    grip[arm] = gripper_signal(hands[arm], options.close_thresh, options.open_thresh);
  }

  const auto idx = resample_indices(frames, bundle.fps, options.target_rate_hz);

  StateActionTrajectory traj;
  traj.dt = 1.0 / options.target_rate_hz;
  for (const auto& track : bundle.tracks) {
    traj.keypoints.push_back({track.id, track.label, track.group, track.object});
  }
  for (std::size_t j : idx) {
    std::vector<geo::Vec3> state;
    state.reserve(tracks3d.size());
    for (const auto& t3 : tracks3d) state.push_back(t3.points[j]);
    BimanualAction action;
    for (int arm = 0; arm < 2; ++arm) {
      action[arm].pose = ee[arm][j];
      action[arm].gripper = grip[arm][j];
    }
    traj.states.push_back(std::move(state));
    traj.actions.push_back(action);
  }
  traj.validate();
  return traj;
}

}  // namespace bax::parse
