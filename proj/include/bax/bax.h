/* C interface to the bimanual demonstration augmentation engine.
 *
 * All functions return bax_status; on failure bax_last_error() holds a
 * message for the calling thread. Objects are opaque handles released with
 * their matching _free function. Strings returned through char** outputs are
 * heap-allocated and released with bax_string_free.
 */
#ifndef BAX_H
#define BAX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32) || defined(_WIN64)
#define BAX_API __declspec(dllexport)
#else
#define BAX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bax_status {
  BAX_OK = 0,
  BAX_ERR_USAGE = 1,
  BAX_ERR_VALIDATION = 2,
  BAX_ERR_VERIFICATION = 3,
  BAX_ERR_IO = 4,
  BAX_ERR_RUNTIME = 5
} bax_status;

BAX_API const char* bax_version(void);
BAX_API const char* bax_last_error(void);
BAX_API void bax_string_free(char* s);

typedef struct bax_trajectory bax_trajectory;
typedef struct bax_template bax_template;
typedef struct bax_object_config bax_object_config;
typedef struct bax_timeline bax_timeline;
typedef struct bax_spec bax_spec;
typedef struct bax_dataset bax_dataset;
typedef struct bax_report bax_report;

BAX_API void bax_trajectory_free(bax_trajectory* t);
BAX_API void bax_template_free(bax_template* t);
BAX_API void bax_object_config_free(bax_object_config* c);
BAX_API void bax_timeline_free(bax_timeline* t);
BAX_API void bax_spec_free(bax_spec* s);
BAX_API void bax_dataset_free(bax_dataset* d);
BAX_API void bax_report_free(bax_report* r);

/* ---- synthetic demo bundles ---------------------------------------- */

/* JSON array of built-in task ids, e.g. ["handover","pour"]. */
BAX_API bax_status bax_task_ids(char** json_out);

/* Renders the task's scripted demo into a bundle directory (meta.json,
 * depth/, tracks.json, hands.json, masks/, template.json, config.json,
 * spec.json, gt_traj.json). noise = depth noise sigma in meters. */
BAX_API bax_status bax_generate_synthetic(const char* task_id, double noise, uint64_t seed,
                                          const char* out_dir);

/* ---- parsing -------------------------------------------------------- */

typedef struct bax_parse_options {
  double target_rate_hz; /* control rate, default 10 */
  int depth_window;      /* odd pixels, default 5 */
  double close_thresh;   /* meters, default 0.02 */
  double open_thresh;    /* meters, default 0.05 */
  double v_jump;         /* m/s, default 1.5 */
  int use_workspace;     /* nonzero: use the reach model below */
  double box_min[3];
  double box_max[3];
  double arm_base[2][3];
  double reach_radius[2];
} bax_parse_options;

BAX_API void bax_parse_options_init(bax_parse_options* options);

BAX_API bax_status bax_parse_bundle(const char* bundle_dir, const bax_parse_options* options,
                                    bax_trajectory** out);

BAX_API bax_status bax_trajectory_load(const char* path, bax_trajectory** out);
BAX_API bax_status bax_trajectory_save(const bax_trajectory* t, const char* path);
BAX_API size_t bax_trajectory_length(const bax_trajectory* t);
BAX_API size_t bax_trajectory_num_keypoints(const bax_trajectory* t);
BAX_API uint64_t bax_trajectory_fingerprint(const bax_trajectory* t);

/* ---- templates and object configurations ---------------------------- */

BAX_API bax_status bax_template_load(const char* path, bax_template** out);

/* JSON array of violation messages; empty array means the template is valid. */
BAX_API bax_status bax_template_issues(const bax_template* t, char** json_out);

/* config.json with explicit object frames; ownership from the trajectory's
 * keypoint metadata. */
BAX_API bax_status bax_object_config_load(const char* path, const bax_trajectory* traj,
                                          bax_object_config** out);

/* masks/object_%d.png over the bundle's first depth frame. */
BAX_API bax_status bax_object_config_from_masks(const char* bundle_dir, int num_objects,
                                                const bax_trajectory* traj, bax_object_config** out);

/* ---- grounding ------------------------------------------------------ */

BAX_API bax_status bax_ground(const bax_trajectory* traj, const bax_template* tmpl,
                              const bax_object_config* config, double eps_skill, double eps_sync,
                              bax_timeline** out);
BAX_API bax_status bax_timeline_save(const bax_timeline* t, const char* path);
BAX_API bax_status bax_timeline_load(const char* path, bax_timeline** out);

/* ---- augmentation --------------------------------------------------- */

BAX_API bax_status bax_spec_load(const char* path, bax_spec** out);
BAX_API bax_status bax_spec_set_count(bax_spec* s, int count);
BAX_API bax_status bax_spec_set_seed(bax_spec* s, uint64_t seed);
BAX_API bax_status bax_spec_set_velocity(bax_spec* s, double velocity);
BAX_API bax_status bax_spec_set_dt(bax_spec* s, double dt);
BAX_API bax_status bax_spec_set_symmetry_plane(bax_spec* s, double nx, double ny, double nz, double offset);
BAX_API uint64_t bax_spec_seed(const bax_spec* s);
BAX_API int bax_spec_count(const bax_spec* s);

/* planner_command: empty or NULL uses the built-in straight-line planner;
 * otherwise an external process speaking the line protocol documented in the
 * README. */
BAX_API bax_status bax_generate(const bax_trajectory* demo, const bax_template* tmpl,
                                const bax_timeline* timeline, const bax_object_config* config,
                                const bax_spec* spec, int threads, const char* planner_command,
                                bax_dataset** out);

BAX_API size_t bax_dataset_size(const bax_dataset* d);
BAX_API size_t bax_dataset_failures(const bax_dataset* d);

BAX_API bax_status bax_dataset_export(const bax_dataset* d, const char* dir, double sigma, double dropout,
                                      uint64_t seed, uint64_t source_demo_hash, uint64_t spec_hash);

/* ---- verification --------------------------------------------------- */

/* Invariant checks over every demo in the dataset. */
BAX_API bax_status bax_verify_dataset(const bax_dataset* d, const bax_trajectory* source,
                                      const bax_object_config* config, const bax_spec* spec, int threads,
                                      bax_report** out);

BAX_API int bax_report_passed(const bax_report* r);
BAX_API double bax_report_pass_rate(const bax_report* r);
BAX_API bax_status bax_report_to_json(const bax_report* r, char** json_out);
BAX_API bax_status bax_report_save(const bax_report* r, const char* path);

/* Kinematic replay of every demo against a built-in task's success
 * predicate. grasp_eps <= 0 uses the task default. */
BAX_API bax_status bax_replay_dataset(const bax_dataset* d, const char* task_id, double grasp_eps,
                                      int threads, size_t* successes_out, double* rate_out);

/* ---- exported dataset inspection ------------------------------------ */

BAX_API bax_status bax_dataset_stats(const char* dir, char** text_out, char** json_out);

/* ---- benchmark ------------------------------------------------------ */

typedef struct bax_bench_result {
  size_t demo_count;
  size_t failure_count;
  double generate_seconds;    /* single-threaded generation, no serialization */
  double generate_seconds_mt; /* with the requested thread count */
  int threads;
} bax_bench_result;

BAX_API bax_status bax_bench(const char* task_id, int count, uint64_t seed, int threads,
                             bax_bench_result* out);

#ifdef __cplusplus
}
#endif

#endif /* BAX_H */
