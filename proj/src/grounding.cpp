#include "grounding.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "json_io.hpp"
#include "parse.hpp"

namespace bax {

using jsonio::json;

std::vector<std::string> validate_template(const TaskTemplate& tmpl) {
  std::vector<std::string> issues;
  if (tmpl.num_objects < 1) issues.push_back("template needs at least one object");
  if (tmpl.stages.empty()) issues.push_back("template needs at least one stage");

  for (std::size_t i = 0; i < tmpl.stages.size(); ++i) {
    const auto& stage = tmpl.stages[i];
    const std::string where = "stage " + std::to_string(i) + ": ";
    if (stage.actions.empty()) {
      issues.push_back(where + "no actions");
      continue;
    }
    if (stage.sync) {
      if (stage.actions.size() != 1) issues.push_back(where + "sync stage must have exactly one action");
      if (stage.actions[0].arm.has_value())
        issues.push_back(where + "sync action covers both arms and must not name one");
    } else {
      if (stage.actions.size() > 2) issues.push_back(where + "async stage has more than two actions");
      std::array<int, 2> per_arm{0, 0};
      for (const auto& action : stage.actions) {
        if (!action.arm.has_value() || *action.arm < 0 || *action.arm > 1) {
          issues.push_back(where + "async action must name arm 0 or 1");
        } else {
          per_arm[*action.arm]++;
        }
      }
      for (int arm = 0; arm < 2; ++arm) {
        if (per_arm[arm] > 1)
          issues.push_back(where + "arm " + std::to_string(arm) + " has more than one action");
      }
    }
    for (const auto& action : stage.actions) {
      for (const auto& token : action.contact) {
        if (token.is_ee) {
          if (token.index < 0 || token.index > 1) issues.push_back(where + "ee token index out of range");
        } else if (token.index < 1 || token.index > tmpl.num_objects) {
          issues.push_back(where + "contact reference out of range");
        }
      }
      if (action.ref < 0 || action.ref > tmpl.num_objects)
        issues.push_back(where + "reference out of range");
    }
  }
  return issues;
}

namespace {

json token_to_json(const ContactToken& t) {
  if (t.is_ee) return t.index == 0 ? "ee0" : "ee1";
  return t.index;
}

ContactToken token_from_json(const json& j) {
  ContactToken t;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "ee0") return {true, 0};
    if (s == "ee1") return {true, 1};
    fail(Errc::validation, "unknown contact token '" + s + "'");
  }
  t.is_ee = false;
  t.index = j.get<int>();
  return t;
}

}  // namespace

TaskTemplate load_template(const std::string& path) {
  const json j = jsonio::load_json_file(path);
  TaskTemplate tmpl;
  tmpl.num_objects = j.at("num_objects").get<int>();
  for (const auto& sj : j.at("stages")) {
    TemplateStage stage;
    stage.sync = sj.at("sync").get<bool>();
    for (const auto& aj : sj.at("actions")) {
      TemplateAction action;
      if (aj.contains("arm") && !aj.at("arm").is_null()) action.arm = aj.at("arm").get<int>();
      const auto& contact = aj.at("contact");
      if (!contact.is_array() || contact.size() != 2)
        fail(Errc::validation, path + ": contact must be a pair");
      action.contact[0] = token_from_json(contact[0]);
      action.contact[1] = token_from_json(contact[1]);
      action.ref = aj.value("ref", 0);
      stage.actions.push_back(action);
    }
    tmpl.stages.push_back(std::move(stage));
  }
  const auto issues = validate_template(tmpl);
  if (!issues.empty()) fail(Errc::validation, path + ": " + issues.front());
  return tmpl;
}

void save_template(const TaskTemplate& tmpl, const std::string& path) {
  json stages = json::array();
  for (const auto& stage : tmpl.stages) {
    json actions = json::array();
    for (const auto& action : stage.actions) {
      json aj{{"contact", json::array({token_to_json(action.contact[0]), token_to_json(action.contact[1])})},
              {"ref", action.ref}};
      aj["arm"] = action.arm.has_value() ? json(*action.arm) : json(nullptr);
      actions.push_back(aj);
    }
    stages.push_back({{"sync", stage.sync}, {"actions", actions}});
  }
  jsonio::save_json_file(path, json{{"num_objects", tmpl.num_objects}, {"stages", stages}});
}

std::vector<std::vector<int>> ownership_from_metadata(const std::vector<KeypointMeta>& keypoints,
                                                      int num_objects) {
  std::vector<std::vector<int>> owned(static_cast<std::size_t>(num_objects));
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    const int obj = keypoints[i].object;
    if (obj < 0 || obj > num_objects)
      fail(Errc::validation, "keypoint " + keypoints[i].id + " owner out of range");
    if (obj > 0) owned[static_cast<std::size_t>(obj - 1)].push_back(static_cast<int>(i));
  }
  return owned;
}

MaskImage load_mask_png(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    fail(Errc::io_error, "cannot read mask " + path + ": " + image.message);
  image.format = PNG_FORMAT_GRAY;
  MaskImage mask;
  mask.width = static_cast<int>(image.width);
  mask.height = static_cast<int>(image.height);
  mask.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, mask.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(Errc::io_error, "cannot decode mask " + path + ": " + image.message);
  }
  return mask;
}

void save_mask_png(const MaskImage& mask, const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(mask.width);
  image.height = static_cast<png_uint_32>(mask.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, mask.pixels.data(), 0, nullptr))
    fail(Errc::io_error, "cannot write mask " + path + ": " + image.message);
}

ObjectConfiguration object_frames_from_masks(const std::vector<MaskImage>& masks,
                                             const std::vector<float>& depth0, const CameraModel& camera,
                                             const std::vector<KeypointMeta>& keypoints) {
  ObjectConfiguration config;
  config.owned = ownership_from_metadata(keypoints, static_cast<int>(masks.size()));

  for (std::size_t k = 0; k < masks.size(); ++k) {
    const auto& mask = masks[k];
    if (mask.width != camera.width || mask.height != camera.height)
      fail(Errc::validation, "mask " + std::to_string(k + 1) + " size differs from the camera image");

    struct Px {
      int x, y;
      double d;
    };
    std::vector<Px> inside;
    for (int y = 0; y < mask.height; ++y) {
      for (int x = 0; x < mask.width; ++x) {
        if (!mask.pixels[static_cast<std::size_t>(y) * mask.width + x]) continue;
        const float d = depth0[static_cast<std::size_t>(y) * camera.width + x];
        if (d > 0.0f && std::isfinite(d)) inside.push_back({x, y, d});
      }
    }
    if (inside.size() < 10)
      fail(Errc::empty_mask, "object " + std::to_string(k + 1) + ": mask has fewer than 10 valid-depth pixels");

    std::vector<double> depths;
    depths.reserve(inside.size());
    for (const auto& p : inside) depths.push_back(p.d);
    auto med_of = [](std::vector<double> v) {
      auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
      std::nth_element(v.begin(), mid, v.end());
      if (v.size() % 2 == 1) return *mid;
      return 0.5 * (*mid + *std::max_element(v.begin(), mid));
    };
    const double med = med_of(depths);
    std::vector<double> dev;
    dev.reserve(depths.size());
    for (double d : depths) dev.push_back(std::abs(d - med));
    const double mad = med_of(dev);

    geo::Vec3 centroid = geo::Vec3::Zero();
    std::size_t kept = 0;
    for (const auto& p : inside) {
      if (std::abs(p.d - med) > 3.0 * mad) continue;
      centroid += camera.backproject(p.x, p.y, p.d);
      ++kept;
    }
    if (kept == 0) fail(Errc::empty_mask, "object " + std::to_string(k + 1) + ": all mask depths rejected");

    geo::Pose frame;
    frame.translation = centroid / static_cast<double>(kept);
    config.frames.push_back(frame);
  }
  return config;
}

ObjectConfiguration load_object_config(const std::string& path, const std::vector<KeypointMeta>& keypoints,
                                       int num_objects) {
  const json j = jsonio::load_json_file(path);
  ObjectConfiguration config;
  for (const auto& oj : j.at("objects")) config.frames.push_back(jsonio::pose_from_json(oj));
  if (num_objects > 0 && config.num_objects() != num_objects)
    fail(Errc::validation, path + ": expected " + std::to_string(num_objects) + " objects");
  config.owned = ownership_from_metadata(keypoints, config.num_objects());
  return config;
}

void save_object_config(const ObjectConfiguration& config, const std::string& path) {
  json objects = json::array();
  for (const auto& f : config.frames) objects.push_back(jsonio::pose_to_json(f));
  jsonio::save_json_file(path, json{{"objects", objects}});
}

const char* segment_kind_name(SegmentKind k) {
  switch (k) {
    case SegmentKind::motion: return "motion";
    case SegmentKind::skill_async: return "skill_async";
    case SegmentKind::skill_sync: return "skill_sync";
    case SegmentKind::idle: return "idle";
  }
  return "unknown";
}

namespace {

SegmentKind segment_kind_from_name(const std::string& name) {
  if (name == "motion") return SegmentKind::motion;
  if (name == "skill_async") return SegmentKind::skill_async;
  if (name == "skill_sync") return SegmentKind::skill_sync;
  if (name == "idle") return SegmentKind::idle;
  fail(Errc::validation, "unknown segment kind '" + name + "'");
}

}  // namespace

void SegmentTimeline::validate() const {
  for (int arm = 0; arm < 2; ++arm) {
    int cursor = 0;
    int last_stage = -1;
    for (const auto& seg : arms[arm]) {
      if (seg.begin != cursor)
        fail(Errc::validation, "arm " + std::to_string(arm) + ": segments do not tile [0, L)");
      if (seg.end <= seg.begin) fail(Errc::validation, "empty segment interval");
      if (seg.is_skill()) {
        if (seg.stage < last_stage) fail(Errc::non_monotone_stages, "skill segments out of stage order");
        last_stage = seg.stage;
      }
      cursor = seg.end;
    }
    if (cursor != length)
      fail(Errc::validation, "arm " + std::to_string(arm) + ": segments do not cover [0, L)");
  }
  // Sync intervals must agree pairwise across arms.
  std::vector<const Segment*> sync0, sync1;
  for (const auto& s : arms[0])
    if (s.kind == SegmentKind::skill_sync) sync0.push_back(&s);
  for (const auto& s : arms[1])
    if (s.kind == SegmentKind::skill_sync) sync1.push_back(&s);
  if (sync0.size() != sync1.size()) fail(Errc::validation, "sync segment counts differ across arms");
  for (std::size_t i = 0; i < sync0.size(); ++i) {
    if (sync0[i]->begin != sync1[i]->begin || sync0[i]->end != sync1[i]->end)
      fail(Errc::validation, "sync segment intervals differ across arms");
  }
  for (int arm = 0; arm < 2; ++arm) {
    for (std::size_t i = 1; i < events.arms[arm].size(); ++i) {
      if (events.arms[arm][i].grasp == events.arms[arm][i - 1].grasp)
        fail(Errc::validation, "grasp/release events do not alternate on arm " + std::to_string(arm));
      if (events.arms[arm][i].t <= events.arms[arm][i - 1].t)
        fail(Errc::validation, "event timestamps not increasing on arm " + std::to_string(arm));
    }
  }
}

void save_timeline(const SegmentTimeline& timeline, const std::string& path) {
  json arms = json::array();
  for (int arm = 0; arm < 2; ++arm) {
    json segs = json::array();
    for (const auto& seg : timeline.arms[arm]) {
      segs.push_back({{"kind", segment_kind_name(seg.kind)},
                      {"stage", seg.stage},
                      {"begin", seg.begin},
                      {"end", seg.end},
                      {"ref", seg.ref}});
    }
    arms.push_back(segs);
  }
  json events = json::array();
  for (int arm = 0; arm < 2; ++arm) {
    json evs = json::array();
    for (const auto& e : timeline.events.arms[arm]) {
      evs.push_back({{"t", e.t}, {"grasp", e.grasp}, {"object", e.object}});
    }
    events.push_back(evs);
  }
  jsonio::save_json_file(path, json{{"length", timeline.length}, {"arms", arms}, {"events", events}});
}

SegmentTimeline load_timeline(const std::string& path) {
  const json j = jsonio::load_json_file(path);
  SegmentTimeline timeline;
  timeline.length = j.at("length").get<int>();
  const auto& arms = j.at("arms");
  if (arms.size() != 2) fail(Errc::validation, path + ": timelines carry two arms");
  for (int arm = 0; arm < 2; ++arm) {
    for (const auto& sj : arms[arm]) {
      Segment seg;
      seg.kind = segment_kind_from_name(sj.at("kind").get<std::string>());
      seg.stage = sj.at("stage").get<int>();
      seg.begin = sj.at("begin").get<int>();
      seg.end = sj.at("end").get<int>();
      seg.ref = sj.at("ref").get<int>();
      timeline.arms[arm].push_back(seg);
    }
  }
  const auto& events = j.at("events");
  for (int arm = 0; arm < 2; ++arm) {
    for (const auto& ej : events[arm]) {
      timeline.events.arms[arm].push_back(
          {ej.at("t").get<int>(), ej.at("grasp").get<bool>(), ej.at("object").get<int>()});
    }
  }
  timeline.validate();
  return timeline;
}

namespace ground {

namespace {

// Earliest maximal contiguous run of `ok` at or after `from`; empty when none.
std::optional<std::pair<int, int>> earliest_run(const std::vector<bool>& ok, int from) {
  const int n = static_cast<int>(ok.size());
  for (int t = std::max(0, from); t < n; ++t) {
    if (!ok[t]) continue;
    int end = t;
    while (end < n && ok[end]) ++end;
    return std::make_pair(t, end);
  }
  return std::nullopt;
}

int contact_object(const TemplateAction& action) {
  for (const auto& token : action.contact) {
    if (!token.is_ee) return token.index;
  }
  return 0;
}

}  // namespace

SegmentTimeline ground_segments(const StateActionTrajectory& traj, const TaskTemplate& tmpl,
                                const ObjectConfiguration& config, double eps_skill, double eps_sync) {
  if (eps_skill <= 0.0 || eps_sync <= 0.0) fail(Errc::invalid_argument, "grounding thresholds must be positive");
  const auto issues = validate_template(tmpl);
  if (!issues.empty()) fail(Errc::validation, "template: " + issues.front());
  if (config.num_objects() != tmpl.num_objects)
    fail(Errc::validation, "object configuration count differs from template");
  const int length = static_cast<int>(traj.length());
  if (length < 2) fail(Errc::validation, "trajectory too short to ground");

  SegmentTimeline timeline;
  timeline.length = length;
  std::array<int, 2> cursor{0, 0};

  auto ee_pos = [&](int arm, int t) { return traj.actions[static_cast<std::size_t>(t)][arm].pose.translation; };
  auto gripper = [&](int arm, int t) { return traj.actions[static_cast<std::size_t>(t)][arm].gripper; };

  for (std::size_t i = 0; i < tmpl.stages.size(); ++i) {
    const auto& stage = tmpl.stages[i];
    if (stage.sync) {
      const int from = std::max(cursor[0], cursor[1]);
      std::vector<bool> ok(static_cast<std::size_t>(length), false);
      for (int t = 0; t < length; ++t) ok[t] = (ee_pos(0, t) - ee_pos(1, t)).norm() < eps_sync;
      const auto run = earliest_run(ok, from);
      if (!run)
        fail(Errc::no_skill_segment,
             "stage " + std::to_string(i) + ": arms never within the sync threshold after frame " +
                 std::to_string(from));
      const Segment seg{SegmentKind::skill_sync, static_cast<int>(i), run->first, run->second,
                        stage.actions[0].ref};
      timeline.arms[0].push_back(seg);
      timeline.arms[1].push_back(seg);
      cursor[0] = cursor[1] = run->second;
      continue;
    }

    std::array<bool, 2> acted{false, false};
    std::array<std::pair<int, int>, 2> intervals{};
    for (const auto& action : stage.actions) {
      const int arm = *action.arm;
      std::optional<std::pair<int, int>> run;
      if (action.ref > 0) {
        const geo::Vec3 center = config.frames[static_cast<std::size_t>(action.ref - 1)].translation;
        std::vector<bool> ok(static_cast<std::size_t>(length), false);
        for (int t = 0; t < length; ++t) ok[t] = (ee_pos(arm, t) - center).norm() < eps_skill;
        run = earliest_run(ok, cursor[arm]);
        if (!run)
          fail(Errc::no_skill_segment, "stage " + std::to_string(i) + ", arm " + std::to_string(arm) +
                                           ": EE never within the skill threshold of object " +
                                           std::to_string(action.ref));
      } else {
        // Task-frame stage: bracket by the arm's gripper events in the
        // residual window; fall back to the full window without events.
        std::vector<int> events;
        for (int t = std::max(1, cursor[arm]); t < length; ++t) {
          if (gripper(arm, t) != gripper(arm, t - 1)) events.push_back(t);
        }
        if (events.empty()) {
          run = std::make_pair(cursor[arm], length);
        } else {
          run = std::make_pair(events.front(), events.back() + 1);
        }
      }
      acted[arm] = true;
      intervals[arm] = *run;
      timeline.arms[arm].push_back(
          {SegmentKind::skill_async, static_cast<int>(i), run->first, run->second, action.ref});
      cursor[arm] = run->second;
    }

    // The arm with no action in this stage idles while its peer acts.
    for (int arm = 0; arm < 2; ++arm) {
      if (acted[arm]) continue;
      const int peer = 1 - arm;
      if (!acted[peer]) continue;
      const int begin = std::max(cursor[arm], intervals[peer].first);
      const int end = std::max(begin, intervals[peer].second);
      if (end > begin) {
        timeline.arms[arm].push_back({SegmentKind::idle, static_cast<int>(i), begin, end, 0});
        cursor[arm] = end;
      }
    }
  }

  // Gaps between detected segments become motion segments.
  for (int arm = 0; arm < 2; ++arm) {
    std::vector<Segment> filled;
    int at = 0;
    for (const auto& seg : timeline.arms[arm]) {
      if (seg.begin < at) fail(Errc::non_monotone_stages, "detected intervals violate template order");
      if (seg.begin > at) filled.push_back({SegmentKind::motion, -1, at, seg.begin, 0});
      filled.push_back(seg);
      at = seg.end;
    }
    if (at < length) filled.push_back({SegmentKind::motion, -1, at, length, 0});
    timeline.arms[arm] = std::move(filled);
  }

  // Grasp/release events from gripper transitions, attached to the object
  // named by the surrounding skill segment's contact.
  for (int arm = 0; arm < 2; ++arm) {
    for (int t = 1; t < length; ++t) {
      const double prev = gripper(arm, t - 1);
      const double curr = gripper(arm, t);
      if (curr == prev) continue;
      GraspEvent event;
      event.t = t;
      event.grasp = curr > prev;
      event.object = 0;
      for (const auto& seg : timeline.arms[arm]) {
        if (!seg.is_skill() || t < seg.begin || t >= seg.end) continue;
        if (seg.stage >= 0) {
          for (const auto& action : tmpl.stages[static_cast<std::size_t>(seg.stage)].actions) {
            const bool covers = !action.arm.has_value() || *action.arm == arm;
            if (covers) {
              event.object = contact_object(action);
              break;
            }
          }
        }
        break;
      }
      timeline.events.arms[arm].push_back(event);
    }
  }

  timeline.validate();
  return timeline;
}

StateActionTrajectory mirror_trajectory(const StateActionTrajectory& traj, const geo::Plane& plane) {
  StateActionTrajectory out = traj;
  for (auto& frame : out.states) {
    for (auto& p : frame) p = geo::reflect_point(p, plane);
  }
  for (auto& action : out.actions) {
    std::swap(action[0], action[1]);
    for (int arm = 0; arm < 2; ++arm) action[arm].pose = geo::reflect_pose(action[arm].pose, plane);
  }
  return out;
}

ObjectConfiguration mirror_config(const ObjectConfiguration& config, const geo::Plane& plane) {
  ObjectConfiguration out = config;
  for (auto& frame : out.frames) frame = geo::reflect_pose(frame, plane);
  return out;
}

TaskTemplate mirror_template(const TaskTemplate& tmpl) {
  TaskTemplate out = tmpl;
  for (auto& stage : out.stages) {
    for (auto& action : stage.actions) {
      if (action.arm.has_value()) action.arm = 1 - *action.arm;
      for (auto& token : action.contact) {
        if (token.is_ee) token.index = 1 - token.index;
      }
    }
  }
  return out;
}

MirroredInputs mirror_template_inputs(const StateActionTrajectory& traj, const ObjectConfiguration& config,
                                      const TaskTemplate& tmpl, const geo::Plane& plane) {
  return {mirror_trajectory(traj, plane), mirror_config(config, plane), mirror_template(tmpl)};
}

}  // namespace ground
}  // namespace bax
