// Command-line frontend for the augmentation engine; drives the shared
// library through its C interface only.
#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "bax/bax.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitVerification = 3;

int exit_code(bax_status status) {
  switch (status) {
    case BAX_OK:
      return kExitOk;
    case BAX_ERR_USAGE:
      return kExitUsage;
    case BAX_ERR_VERIFICATION:
      return kExitVerification;
    default:
      return kExitValidation;
  }
}

int fail_with(bax_status status) {
  std::fprintf(stderr, "error: %s\n", bax_last_error());
  return exit_code(status);
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  ~Handle() {
    if (ptr) Free(ptr);
  }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Trajectory = Handle<bax_trajectory, bax_trajectory_free>;
using Template = Handle<bax_template, bax_template_free>;
using Config = Handle<bax_object_config, bax_object_config_free>;
using Timeline = Handle<bax_timeline, bax_timeline_free>;
using Spec = Handle<bax_spec, bax_spec_free>;
using Dataset = Handle<bax_dataset, bax_dataset_free>;
using Report = Handle<bax_report, bax_report_free>;

struct CommonInputs {
  std::string traj_path;
  std::string template_path;
  std::string timeline_path;
  std::string config_path;
  std::string spec_path;
};

struct SpecOverrides {
  int count = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double velocity = -1.0;
  double dt = -1.0;
  std::string mirror_plane;  // "x" | "y" | "z" with optional ",offset"
};

void add_spec_override_flags(CLI::App* cmd, SpecOverrides& overrides) {
  cmd->add_option("--count", overrides.count, "number of augmentations (overrides spec.json)");
  cmd->add_option("--seed", overrides.seed, "rng seed (overrides spec.json)")
      ->each([&](const std::string&) { overrides.seed_set = true; });
  cmd->add_option("--velocity", overrides.velocity, "planner velocity m/s (overrides spec.json)");
  cmd->add_option("--dt", overrides.dt, "control period s (overrides spec.json)");
  cmd->add_option("--mirror-plane", overrides.mirror_plane,
                  "symmetry plane as axis[,offset], e.g. y or y,0.0 (overrides spec.json)");
}

bax_status apply_overrides(bax_spec* spec, const SpecOverrides& overrides) {
  bax_status status = BAX_OK;
  if (overrides.count >= 0) status = bax_spec_set_count(spec, overrides.count);
  if (status == BAX_OK && overrides.seed_set) status = bax_spec_set_seed(spec, overrides.seed);
  if (status == BAX_OK && overrides.velocity > 0.0) status = bax_spec_set_velocity(spec, overrides.velocity);
  if (status == BAX_OK && overrides.dt > 0.0) status = bax_spec_set_dt(spec, overrides.dt);
  if (status == BAX_OK && !overrides.mirror_plane.empty()) {
    double normal[3] = {0.0, 0.0, 0.0};
    double offset = 0.0;
    const char axis = overrides.mirror_plane[0];
    if (axis == 'x') normal[0] = 1.0;
    else if (axis == 'y') normal[1] = 1.0;
    else if (axis == 'z') normal[2] = 1.0;
    else return BAX_ERR_USAGE;
    const auto comma = overrides.mirror_plane.find(',');
    if (comma != std::string::npos) offset = std::stod(overrides.mirror_plane.substr(comma + 1));
    status = bax_spec_set_symmetry_plane(spec, normal[0], normal[1], normal[2], offset);
  }
  return status;
}

// Loads the five pipeline inputs shared by augment and verify.
bax_status load_pipeline(const CommonInputs& inputs, Trajectory& traj, Template& tmpl, Timeline& timeline,
                         Config& config, Spec& spec) {
  bax_status status = bax_trajectory_load(inputs.traj_path.c_str(), traj.out());
  if (status == BAX_OK) status = bax_template_load(inputs.template_path.c_str(), tmpl.out());
  if (status == BAX_OK) status = bax_timeline_load(inputs.timeline_path.c_str(), timeline.out());
  if (status == BAX_OK) status = bax_object_config_load(inputs.config_path.c_str(), traj.get(), config.out());
  if (status == BAX_OK) status = bax_spec_load(inputs.spec_path.c_str(), spec.out());
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation-free bimanual demonstration augmentation engine"};
  app.require_subcommand(1);

  // gen-synthetic ------------------------------------------------------
  std::string gen_task = "pour", gen_out;
  double gen_noise = 0.0;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-synthetic", "render a scripted demo into a camera bundle");
  gen->add_option("--task", gen_task, "task id (see `pad tasks`)")->capture_default_str();
  gen->add_option("--out", gen_out, "output bundle directory")->required();
  gen->add_option("--noise", gen_noise, "depth noise sigma, meters")->capture_default_str();
  gen->add_option("--seed", gen_seed, "noise seed")->capture_default_str();

  auto* tasks = app.add_subcommand("tasks", "list built-in synthetic tasks");

  // parse ----------------------------------------------------------------
  std::string parse_bundle, parse_out;
  bax_parse_options parse_options;
  bax_parse_options_init(&parse_options);
  auto* parse = app.add_subcommand("parse", "parse a demo bundle into a state-action trajectory");
  parse->add_option("--bundle", parse_bundle, "bundle directory")->required();
  parse->add_option("--out", parse_out, "output traj.json")->required();
  parse->add_option("--rate", parse_options.target_rate_hz, "control rate, Hz")->capture_default_str();
  parse->add_option("--depth-window", parse_options.depth_window, "median window, odd pixels")
      ->capture_default_str();
  parse->add_option("--close-thresh", parse_options.close_thresh, "gripper close threshold, m")
      ->capture_default_str();
  parse->add_option("--open-thresh", parse_options.open_thresh, "gripper open threshold, m")
      ->capture_default_str();
  parse->add_option("--vjump", parse_options.v_jump, "jump repair velocity bound, m/s")
      ->capture_default_str();

  // ground ---------------------------------------------------------------
  std::string ground_traj, ground_template, ground_config, ground_bundle, ground_out;
  int ground_masks_objects = 0;
  double eps_skill = 0.10, eps_sync = 0.30;
  auto* ground = app.add_subcommand("ground", "ground template stages into per-arm segments");
  ground->add_option("--traj", ground_traj, "parsed traj.json")->required();
  ground->add_option("--template", ground_template, "template.json")->required();
  ground->add_option("--config", ground_config, "config.json with object frames");
  ground->add_option("--bundle", ground_bundle, "bundle dir with masks/ (alternative to --config)");
  ground->add_option("--mask-objects", ground_masks_objects, "object count when using --bundle masks");
  ground->add_option("--out", ground_out, "output timeline.json")->required();
  ground->add_option("--eps-skill", eps_skill, "skill proximity threshold, m")->capture_default_str();
  ground->add_option("--eps-sync", eps_sync, "sync proximity threshold, m")->capture_default_str();

  // augment ---------------------------------------------------------------
  CommonInputs aug_inputs;
  SpecOverrides aug_overrides;
  std::string aug_out, aug_planner;
  int aug_threads = 1;
  double aug_noise = 0.005, aug_dropout = 0.1;
  bool aug_skip_verify = false;
  auto* augment = app.add_subcommand("augment", "generate, verify, and export an augmented dataset");
  augment->add_option("--traj", aug_inputs.traj_path, "source traj.json")->required();
  augment->add_option("--template", aug_inputs.template_path, "template.json")->required();
  augment->add_option("--timeline", aug_inputs.timeline_path, "timeline.json")->required();
  augment->add_option("--config", aug_inputs.config_path, "config.json")->required();
  augment->add_option("--spec", aug_inputs.spec_path, "spec.json")->required();
  augment->add_option("--out", aug_out, "output dataset directory")->required();
  augment->add_option("--threads", aug_threads, "worker threads")->capture_default_str();
  augment->add_option("--noise", aug_noise, "export keypoint noise sigma, m")->capture_default_str();
  augment->add_option("--dropout", aug_dropout, "export keypoint dropout probability")
      ->capture_default_str();
  augment->add_option("--planner-cmd", aug_planner, "external motion planner command");
  augment->add_flag("--skip-verify", aug_skip_verify, "skip the post-generation invariant checks");
  add_spec_override_flags(augment, aug_overrides);

  // verify -----------------------------------------------------------------
  CommonInputs verify_inputs;
  SpecOverrides verify_overrides;
  std::string verify_task, verify_report;
  int verify_threads = 1;
  double verify_grasp_eps = 0.0;
  auto* verify = app.add_subcommand(
      "verify", "regenerate a dataset deterministically and run the invariant checks");
  verify->add_option("--traj", verify_inputs.traj_path, "source traj.json")->required();
  verify->add_option("--template", verify_inputs.template_path, "template.json")->required();
  verify->add_option("--timeline", verify_inputs.timeline_path, "timeline.json")->required();
  verify->add_option("--config", verify_inputs.config_path, "config.json")->required();
  verify->add_option("--spec", verify_inputs.spec_path, "spec.json")->required();
  verify->add_option("--task", verify_task, "built-in task id: also replay against its success predicate");
  verify->add_option("--grasp-eps", verify_grasp_eps, "replay attachment tolerance, m (0 = task default)");
  verify->add_option("--report", verify_report, "write the machine-readable report here");
  verify->add_option("--threads", verify_threads, "worker threads")->capture_default_str();
  add_spec_override_flags(verify, verify_overrides);

  // stats ---------------------------------------------------------------
  std::string stats_dir, stats_json;
  auto* stats = app.add_subcommand("stats", "summarize an exported dataset");
  stats->add_option("--dataset", stats_dir, "dataset directory")->required();
  stats->add_option("--json", stats_json, "also write the JSON summary here");

  // bench ---------------------------------------------------------------
  std::string bench_task = "pour";
  int bench_count = 1000, bench_threads = 1;
  std::uint64_t bench_seed = 7;
  auto* bench = app.add_subcommand("bench", "time dataset generation (no serialization)");
  bench->add_option("--task", bench_task, "task id")->capture_default_str();
  bench->add_option("--count", bench_count, "augmentations to generate")->capture_default_str();
  bench->add_option("--threads", bench_threads, "worker threads for the second run")
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "rng seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (gen->parsed()) {
    const bax_status status = bax_generate_synthetic(gen_task.c_str(), gen_noise, gen_seed, gen_out.c_str());
    if (status != BAX_OK) return fail_with(status);
    std::printf("bundle written to %s\n", gen_out.c_str());
    return kExitOk;
  }

  if (tasks->parsed()) {
    char* ids = nullptr;
    const bax_status status = bax_task_ids(&ids);
    if (status != BAX_OK) return fail_with(status);
    std::printf("%s\n", ids);
    bax_string_free(ids);
    return kExitOk;
  }

  if (parse->parsed()) {
    Trajectory traj;
    bax_status status = bax_parse_bundle(parse_bundle.c_str(), &parse_options, traj.out());
    if (status == BAX_OK) status = bax_trajectory_save(traj.get(), parse_out.c_str());
    if (status != BAX_OK) return fail_with(status);
    std::printf("parsed %zu frames, %zu keypoints -> %s\n", bax_trajectory_length(traj.get()),
                bax_trajectory_num_keypoints(traj.get()), parse_out.c_str());
    return kExitOk;
  }

  if (ground->parsed()) {
    if (ground_config.empty() == ground_bundle.empty()) {
      std::fprintf(stderr, "error: provide exactly one of --config or --bundle\n");
      return kExitUsage;
    }
    Trajectory traj;
    Template tmpl;
    Config config;
    Timeline timeline;
    bax_status status = bax_trajectory_load(ground_traj.c_str(), traj.out());
    if (status == BAX_OK) status = bax_template_load(ground_template.c_str(), tmpl.out());
    if (status == BAX_OK) {
      if (!ground_config.empty()) {
        status = bax_object_config_load(ground_config.c_str(), traj.get(), config.out());
      } else {
        status = bax_object_config_from_masks(ground_bundle.c_str(), ground_masks_objects, traj.get(),
                                              config.out());
      }
    }
    if (status == BAX_OK)
      status = bax_ground(traj.get(), tmpl.get(), config.get(), eps_skill, eps_sync, timeline.out());
    if (status == BAX_OK) status = bax_timeline_save(timeline.get(), ground_out.c_str());
    if (status != BAX_OK) return fail_with(status);
    std::printf("timeline written to %s\n", ground_out.c_str());
    return kExitOk;
  }

  if (augment->parsed()) {
    Trajectory traj;
    Template tmpl;
    Timeline timeline;
    Config config;
    Spec spec;
    bax_status status = load_pipeline(aug_inputs, traj, tmpl, timeline, config, spec);
    if (status == BAX_OK) status = apply_overrides(spec.get(), aug_overrides);
    Dataset dataset;
    if (status == BAX_OK)
      status = bax_generate(traj.get(), tmpl.get(), timeline.get(), config.get(), spec.get(), aug_threads,
                            aug_planner.empty() ? nullptr : aug_planner.c_str(), dataset.out());
    if (status != BAX_OK) return fail_with(status);
    std::printf("generated %zu demos (%zu failures)\n", bax_dataset_size(dataset.get()),
                bax_dataset_failures(dataset.get()));

    if (!aug_skip_verify) {
      Report report;
      status = bax_verify_dataset(dataset.get(), traj.get(), config.get(), spec.get(), aug_threads,
                                  report.out());
      if (status != BAX_OK) return fail_with(status);
      std::printf("invariant checks: %.1f%% pass\n", 100.0 * bax_report_pass_rate(report.get()));
      if (!bax_report_passed(report.get())) {
        char* json = nullptr;
        if (bax_report_to_json(report.get(), &json) == BAX_OK) {
          std::fprintf(stderr, "%s\n", json);
          bax_string_free(json);
        }
        return kExitVerification;
      }
    }

    // The export seed follows the generation seed so reruns are bit-identical.
    const std::uint64_t export_seed = bax_spec_seed(spec.get());
    status = bax_dataset_export(dataset.get(), aug_out.c_str(), aug_noise, aug_dropout, export_seed,
                                bax_trajectory_fingerprint(traj.get()), 0);
    if (status != BAX_OK) return fail_with(status);
    std::printf("dataset exported to %s\n", aug_out.c_str());
    return kExitOk;
  }

  if (verify->parsed()) {
    Trajectory traj;
    Template tmpl;
    Timeline timeline;
    Config config;
    Spec spec;
    bax_status status = load_pipeline(verify_inputs, traj, tmpl, timeline, config, spec);
    if (status == BAX_OK) status = apply_overrides(spec.get(), verify_overrides);
    Dataset dataset;
    if (status == BAX_OK)
      status = bax_generate(traj.get(), tmpl.get(), timeline.get(), config.get(), spec.get(),
                            verify_threads, nullptr, dataset.out());
    Report report;
    if (status == BAX_OK)
      status = bax_verify_dataset(dataset.get(), traj.get(), config.get(), spec.get(), verify_threads,
                                  report.out());
    if (status != BAX_OK) return fail_with(status);

    std::printf("invariants: %zu demos, %.1f%% pass\n", bax_dataset_size(dataset.get()),
                100.0 * bax_report_pass_rate(report.get()));
    bool ok = bax_report_passed(report.get()) != 0;

    if (!verify_task.empty()) {
      size_t successes = 0;
      double rate = 0.0;
      status = bax_replay_dataset(dataset.get(), verify_task.c_str(), verify_grasp_eps, verify_threads,
                                  &successes, &rate);
      if (status != BAX_OK) return fail_with(status);
      std::printf("replay: %zu/%zu succeed (%.1f%%)\n", successes, bax_dataset_size(dataset.get()),
                  100.0 * rate);
      ok = ok && rate >= 0.99;
    }

    if (!verify_report.empty()) {
      status = bax_report_save(report.get(), verify_report.c_str());
      if (status != BAX_OK) return fail_with(status);
    }
    return ok ? kExitOk : kExitVerification;
  }

  if (stats->parsed()) {
    char* text = nullptr;
    char* json = nullptr;
    const bax_status status = bax_dataset_stats(stats_dir.c_str(), &text, &json);
    if (status != BAX_OK) return fail_with(status);
    std::printf("%s", text);
    if (!stats_json.empty()) {
      FILE* f = std::fopen(stats_json.c_str(), "w");
      if (!f) {
        std::fprintf(stderr, "error: cannot write %s\n", stats_json.c_str());
        bax_string_free(text);
        bax_string_free(json);
        return kExitValidation;
      }
      std::fputs(json, f);
      std::fputc('\n', f);
      std::fclose(f);
    }
    bax_string_free(text);
    bax_string_free(json);
    return kExitOk;
  }

  if (bench->parsed()) {
    bax_bench_result result{};
    const bax_status status = bax_bench(bench_task.c_str(), bench_count, bench_seed, bench_threads, &result);
    if (status != BAX_OK) return fail_with(status);
    std::printf("task %s: %zu demos (%zu failures)\n", bench_task.c_str(), result.demo_count,
                result.failure_count);
    std::printf("single-threaded: %.3f s (%.0f demos/s)\n", result.generate_seconds,
                result.demo_count / result.generate_seconds);
    if (bench_threads > 1) {
      std::printf("%d threads: %.3f s (%.0f demos/s)\n", result.threads, result.generate_seconds_mt,
                  result.demo_count / result.generate_seconds_mt);
    }
    return kExitOk;
  }

  return kExitUsage;
}
