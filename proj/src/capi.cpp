#include "bax/bax.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <filesystem>
#include <string>

#include "augment.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "grounding.hpp"
#include "parse.hpp"
#include "synthetic.hpp"
#include "trajectory.hpp"
#include "verify.hpp"

using namespace bax;

struct bax_trajectory {
  StateActionTrajectory value;
};
struct bax_template {
  TaskTemplate value;
};
struct bax_object_config {
  ObjectConfiguration value;
};
struct bax_timeline {
  SegmentTimeline value;
};
struct bax_spec {
  AugmentationSpec value;
};
struct bax_dataset {
  aug::GenerateResult value;
};
struct bax_report {
  verify::DatasetReport value;
};

namespace {

thread_local std::string g_last_error;

bax_status status_of(Errc code) {
  switch (code) {
    case Errc::io_error:
      return BAX_ERR_IO;
    case Errc::verification_failed:
      return BAX_ERR_VERIFICATION;
    case Errc::invalid_argument:
      return BAX_ERR_USAGE;
    default:
      return BAX_ERR_VALIDATION;
  }
}

template <typename Fn>
bax_status guarded(Fn&& fn) {
  try {
    fn();
    return BAX_OK;
  } catch (const Error& e) {
    g_last_error = std::string(errc_name(e.code())) + ": " + e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BAX_ERR_RUNTIME;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bax_status require(bool condition, const char* message) {
  if (condition) return BAX_OK;
  g_last_error = message;
  return BAX_ERR_USAGE;
}

}  // namespace

extern "C" {

const char* bax_version(void) { return "1.0.0"; }

const char* bax_last_error(void) { return g_last_error.c_str(); }

void bax_string_free(char* s) { std::free(s); }

void bax_trajectory_free(bax_trajectory* t) { delete t; }
void bax_template_free(bax_template* t) { delete t; }
void bax_object_config_free(bax_object_config* c) { delete c; }
void bax_timeline_free(bax_timeline* t) { delete t; }
void bax_spec_free(bax_spec* s) { delete s; }
void bax_dataset_free(bax_dataset* d) { delete d; }
void bax_report_free(bax_report* r) { delete r; }

bax_status bax_task_ids(char** json_out) {
  if (require(json_out != nullptr, "json_out is null")) return BAX_ERR_USAGE;
  return guarded([&] {
    jsonio::json ids = jsonio::json::array();
    for (const auto& id : synth::task_ids()) ids.push_back(id);
    *json_out = dup_string(ids.dump());
  });
}

bax_status bax_generate_synthetic(const char* task_id, double noise, uint64_t seed, const char* out_dir) {
  if (require(task_id && out_dir, "task_id and out_dir are required")) return BAX_ERR_USAGE;
  return guarded([&] { synth::generate_bundle_dir(task_id, noise, seed, out_dir); });
}

void bax_parse_options_init(bax_parse_options* options) {
  if (!options) return;
  *options = bax_parse_options{};
  options->target_rate_hz = 10.0;
  options->depth_window = 5;
  options->close_thresh = 0.02;
  options->open_thresh = 0.05;
  options->v_jump = 1.5;
  options->use_workspace = 0;
}

bax_status bax_parse_bundle(const char* bundle_dir, const bax_parse_options* options, bax_trajectory** out) {
  if (require(bundle_dir && out, "bundle_dir and out are required")) return BAX_ERR_USAGE;
  return guarded([&] {
    ParseOptions parse_options;
    if (options) {
      parse_options.target_rate_hz = options->target_rate_hz;
      parse_options.depth_window = options->depth_window;
      parse_options.close_thresh = options->close_thresh;
      parse_options.open_thresh = options->open_thresh;
      parse_options.v_jump = options->v_jump;
      if (options->use_workspace) {
        WorkspaceGeometry ws;
        for (int i = 0; i < 3; ++i) {
          ws.box_min[i] = options->box_min[i];
          ws.box_max[i] = options->box_max[i];
        }
        for (int arm = 0; arm < 2; ++arm) {
          for (int i = 0; i < 3; ++i) ws.arm_base[arm][i] = options->arm_base[arm][i];
          ws.reach_radius[arm] = options->reach_radius[arm];
        }
        parse_options.workspace = ws;
      }
    }
    const DemoBundle bundle = load_bundle(bundle_dir);
    *out = new bax_trajectory{parse::parse_demo(bundle, parse_options)};
  });
}

bax_status bax_trajectory_load(const char* path, bax_trajectory** out) {
  if (require(path && out, "path and out are required")) return BAX_ERR_USAGE;
  return guarded([&] { *out = new bax_trajectory{load_trajectory(path)}; });
}

bax_status bax_trajectory_save(const bax_trajectory* t, const char* path) {
  if (require(t && path, "trajectory and path are required")) return BAX_ERR_USAGE;
  return guarded([&] { save_trajectory(t->value, path); });
}

size_t bax_trajectory_length(const bax_trajectory* t) { return t ? t->value.length() : 0; }

size_t bax_trajectory_num_keypoints(const bax_trajectory* t) { return t ? t->value.num_keypoints() : 0; }

uint64_t bax_trajectory_fingerprint(const bax_trajectory* t) { return t ? trajectory_hash(t->value) : 0; }

bax_status bax_template_load(const char* path, bax_template** out) {
  if (require(path && out, "path and out are required")) return BAX_ERR_USAGE;
  return guarded([&] { *out = new bax_template{load_template(path)}; });
}

bax_status bax_template_issues(const bax_template* t, char** json_out) {
  if (require(t && json_out, "template and json_out are required")) return BAX_ERR_USAGE;
  return guarded([&] {
    jsonio::json issues = jsonio::json::array();
    for (const auto& issue : validate_template(t->value)) issues.push_back(issue);
    *json_out = dup_string(issues.dump());
  });
}

bax_status bax_object_config_load(const char* path, const bax_trajectory* traj, bax_object_config** out) {
  if (require(path && traj && out, "path, trajectory, and out are required")) return BAX_ERR_USAGE;
  return guarded([&] { *out = new bax_object_config{load_object_config(path, traj->value.keypoints, 0)}; });
}

bax_status bax_object_config_from_masks(const char* bundle_dir, int num_objects, const bax_trajectory* traj,
                                        bax_object_config** out) {
  if (require(bundle_dir && traj && out, "bundle_dir, trajectory, and out are required")) return BAX_ERR_USAGE;
  return guarded([&] {
    namespace fs = std::filesystem;
    const DemoBundle bundle = load_bundle(bundle_dir);
    std::vector<MaskImage> masks;
    for (int k = 1; k <= num_objects; ++k) {
      const fs::path mask_path = fs::path(bundle_dir) / "masks" / ("object_" + std::to_string(k) + ".png");
      masks.push_back(load_mask_png(mask_path.string()));
    }
    *out = new bax_object_config{
        object_frames_from_masks(masks, bundle.depth[0], bundle.camera, traj->value.keypoints)};
  });
}

bax_status bax_ground(const bax_trajectory* traj, const bax_template* tmpl, const bax_object_config* config,
                      double eps_skill, double eps_sync, bax_timeline** out) {
  if (require(traj && tmpl && config && out, "trajectory, template, config, and out are required"))
    return BAX_ERR_USAGE;
  return guarded([&] {
    *out = new bax_timeline{
        ground::ground_segments(traj->value, tmpl->value, config->value, eps_skill, eps_sync)};
  });
}

bax_status bax_timeline_save(const bax_timeline* t, const char* path) {
  if (require(t && path, "timeline and path are required")) return BAX_ERR_USAGE;
  return guarded([&] { save_timeline(t->value, path); });
}

bax_status bax_timeline_load(const char* path, bax_timeline** out) {
  if (require(path && out, "path and out are required")) return BAX_ERR_USAGE;
  return guarded([&] { *out = new bax_timeline{load_timeline(path)}; });
}

bax_status bax_spec_load(const char* path, bax_spec** out) {
  if (require(path && out, "path and out are required")) return BAX_ERR_USAGE;
  return guarded([&] { *out = new bax_spec{load_augmentation_spec(path)}; });
}

bax_status bax_spec_set_count(bax_spec* s, int count) {
  if (require(s != nullptr, "spec is null")) return BAX_ERR_USAGE;
  s->value.count = count;
  return BAX_OK;
}

bax_status bax_spec_set_seed(bax_spec* s, uint64_t seed) {
  if (require(s != nullptr, "spec is null")) return BAX_ERR_USAGE;
  s->value.seed = seed;
  return BAX_OK;
}

bax_status bax_spec_set_velocity(bax_spec* s, double velocity) {
  if (require(s != nullptr, "spec is null")) return BAX_ERR_USAGE;
  s->value.velocity = velocity;
  return BAX_OK;
}

bax_status bax_spec_set_dt(bax_spec* s, double dt) {
  if (require(s != nullptr, "spec is null")) return BAX_ERR_USAGE;
  s->value.dt = dt;
  return BAX_OK;
}

bax_status bax_spec_set_symmetry_plane(bax_spec* s, double nx, double ny, double nz, double offset) {
  if (require(s != nullptr, "spec is null")) return BAX_ERR_USAGE;
  return guarded([&] {
    geo::Vec3 normal(nx, ny, nz);
    if (normal.norm() < geo::kVecEps) fail(Errc::validation, "plane normal must be nonzero");
    s->value.symmetry_plane = {normal.normalized(), offset};
  });
}

uint64_t bax_spec_seed(const bax_spec* s) { return s ? s->value.seed : 0; }

int bax_spec_count(const bax_spec* s) { return s ? s->value.count : 0; }

bax_status bax_generate(const bax_trajectory* demo, const bax_template* tmpl, const bax_timeline* timeline,
                        const bax_object_config* config, const bax_spec* spec, int threads,
                        const char* planner_command, bax_dataset** out) {
  if (require(demo && tmpl && timeline && config && spec && out, "all handles are required"))
    return BAX_ERR_USAGE;
  return guarded([&] {
    PlannerFn planner;
    if (planner_command && planner_command[0] != '\0') planner = subprocess_planner(planner_command);
    *out = new bax_dataset{aug::generate_dataset(demo->value, tmpl->value, timeline->value, config->value,
                                                 spec->value, threads, planner)};
  });
}

size_t bax_dataset_size(const bax_dataset* d) { return d ? d->value.demos.size() : 0; }

size_t bax_dataset_failures(const bax_dataset* d) { return d ? d->value.failures.size() : 0; }

bax_status bax_dataset_export(const bax_dataset* d, const char* dir, double sigma, double dropout,
                              uint64_t seed, uint64_t source_demo_hash, uint64_t spec_hash) {
  if (require(d && dir, "dataset and dir are required")) return BAX_ERR_USAGE;
  return guarded([&] {
    data::ExportOptions options;
    options.sigma = sigma;
    options.dropout = dropout;
    options.seed = seed;
    data::export_dataset(d->value.demos, dir, options, {source_demo_hash, spec_hash});
  });
}

bax_status bax_verify_dataset(const bax_dataset* d, const bax_trajectory* source,
                              const bax_object_config* config, const bax_spec* spec, int threads,
                              bax_report** out) {
  if (require(d && source && config && spec && out, "all handles are required")) return BAX_ERR_USAGE;
  return guarded([&] {
    *out = new bax_report{
        verify::check_dataset(d->value.demos, source->value, config->value, spec->value, threads)};
  });
}

int bax_report_passed(const bax_report* r) { return r && r->value.all_passed() ? 1 : 0; }

double bax_report_pass_rate(const bax_report* r) { return r ? r->value.pass_rate() : 0.0; }

bax_status bax_report_to_json(const bax_report* r, char** json_out) {
  if (require(r && json_out, "report and json_out are required")) return BAX_ERR_USAGE;
  return guarded([&] {
    jsonio::json failures = jsonio::json::array();
    for (const auto& [index, report] : r->value.failures) {
      failures.push_back({{"demo", index}, {"report", report.to_json()}});
    }
    const jsonio::json j{{"total", r->value.total},
                         {"passed", r->value.passed},
                         {"pass_rate", r->value.pass_rate()},
                         {"all_passed", r->value.all_passed()},
                         {"failures", failures}};
    *json_out = dup_string(j.dump(1, '\t'));
  });
}

bax_status bax_report_save(const bax_report* r, const char* path) {
  if (require(r && path, "report and path are required")) return BAX_ERR_USAGE;
  char* text = nullptr;
  const bax_status status = bax_report_to_json(r, &text);
  if (status != BAX_OK) return status;
  const bax_status out = guarded([&] {
    std::ofstream f(path);
    if (!f) fail(Errc::io_error, std::string("cannot write ") + path);
    f << text << '\n';
  });
  bax_string_free(text);
  return out;
}

bax_status bax_replay_dataset(const bax_dataset* d, const char* task_id, double grasp_eps, int threads,
                              size_t* successes_out, double* rate_out) {
  if (require(d && task_id, "dataset and task_id are required")) return BAX_ERR_USAGE;
  return guarded([&] {
    const auto& task = synth::get_task(task_id);
    const double eps = grasp_eps > 0.0 ? grasp_eps : task.grasp_eps;
    const auto stats = verify::replay_dataset(d->value.demos, task, eps, threads);
    if (successes_out) *successes_out = stats.successes;
    if (rate_out) *rate_out = stats.rate();
  });
}

bax_status bax_dataset_stats(const char* dir, char** text_out, char** json_out) {
  if (require(dir != nullptr, "dir is required")) return BAX_ERR_USAGE;
  return guarded([&] {
    const auto dataset = data::import_dataset(dir);
    const auto stats = data::dataset_stats(dataset);
    if (text_out) *text_out = dup_string(stats.to_text());
    if (json_out) *json_out = dup_string(stats.to_json().dump(1, '\t'));
  });
}

bax_status bax_bench(const char* task_id, int count, uint64_t seed, int threads, bax_bench_result* out) {
  if (require(task_id && out, "task_id and out are required")) return BAX_ERR_USAGE;
  return guarded([&] {
    const auto& task = synth::get_task(task_id);
    const auto timeline =
        ground::ground_segments(task.demo, task.tmpl, task.config, task.eps_skill, task.eps_sync);
    AugmentationSpec spec = task.spec;
    spec.count = count;
    spec.seed = seed;

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const auto single = aug::generate_dataset(task.demo, task.tmpl, timeline, task.config, spec, 1);
    const auto t1 = clock::now();
    out->generate_seconds = std::chrono::duration<double>(t1 - t0).count();
    out->demo_count = single.demos.size();
    out->failure_count = single.failures.size();
    out->threads = threads;
    out->generate_seconds_mt = out->generate_seconds;
    if (threads > 1) {
      const auto t2 = clock::now();
      const auto multi = aug::generate_dataset(task.demo, task.tmpl, timeline, task.config, spec, threads);
      const auto t3 = clock::now();
      out->generate_seconds_mt = std::chrono::duration<double>(t3 - t2).count();
      (void)multi;
    }
  });
}

}  // extern "C"
