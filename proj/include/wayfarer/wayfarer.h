/* wayfarer C API: goal-conditioned locomotion training, evaluation and
 * teleoperation behind opaque handles. Every function returns a wf_status;
 * on failure wf_last_error() describes the problem for the calling thread.
 * Strings returned through char** are owned by the caller and released
 * with wf_string_free(). */
#ifndef WAYFARER_H
#define WAYFARER_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WF_API __declspec(dllexport)
#elif defined(__GNUC__)
#define WF_API __attribute__((visibility("default")))
#else
#define WF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wf_status {
  WF_OK = 0,
  WF_ERR_INVALID_ARGUMENT = 1,
  WF_ERR_CONFIG = 2,
  WF_ERR_IO = 3,
  WF_ERR_VERSION = 4,
  WF_ERR_RUNTIME = 5,
  WF_ERR_STATE = 6
} wf_status;

typedef struct wf_config wf_config;
typedef struct wf_checkpoint wf_checkpoint;
typedef struct wf_report wf_report;
typedef struct wf_server wf_server;

WF_API const char* wf_version(void);
WF_API const char* wf_last_error(void);
WF_API void wf_string_free(char* s);

/* Training configuration. */
WF_API wf_status wf_config_create(wf_config** out);
WF_API wf_status wf_config_load(const char* path, wf_config** out);
/* `assignment` is "dotted.key=value", e.g. "episode.m_waypoints=2". */
WF_API wf_status wf_config_set(wf_config* config, const char* assignment);
/* 1 when the dotted key is present in the document (not just defaulted). */
WF_API int wf_config_has(const wf_config* config, const char* dotted_key);
WF_API wf_status wf_config_to_json(const wf_config* config, char** out_json);
WF_API void wf_config_destroy(wf_config* config);

typedef struct wf_iteration_metrics {
  long iteration;
  long env_steps;
  double mean_return;
  double mean_episode_len;
  double mean_waypoints;
  double policy_loss;
  double value_loss;
  double entropy;
} wf_iteration_metrics;

typedef void (*wf_progress_fn)(const wf_iteration_metrics* metrics, void* user);

/* Trains and writes <out_dir>/checkpoints/ and <out_dir>/metrics.csv when
 * out_dir is non-NULL. `out` may be NULL. */
WF_API wf_status wf_train(const wf_config* config, const char* out_dir, wf_progress_fn progress, void* user,
                          wf_checkpoint** out);

WF_API wf_status wf_checkpoint_load(const char* path, wf_checkpoint** out);
WF_API wf_status wf_checkpoint_save(const wf_checkpoint* checkpoint, const char* path);
/* JSON summary: variant, agent, iteration, seed, layer dims, log_std. */
WF_API wf_status wf_checkpoint_describe(const wf_checkpoint* checkpoint, char** out_json);
WF_API void wf_checkpoint_destroy(wf_checkpoint* checkpoint);

typedef struct wf_eval_options {
  uint64_t seed;
  int trials;             /* per test case; must be >= 1 */
  int deterministic;      /* nonzero: use the policy mean */
  const char* waypoints;  /* "x1,y1;x2,y2" custom path, or NULL for the built-in suite */
  const char* traj_dir;   /* per-trial trajectory CSVs, or NULL */
} wf_eval_options;

WF_API void wf_eval_options_init(wf_eval_options* options);
WF_API wf_status wf_evaluate(const wf_checkpoint* checkpoint, const wf_eval_options* options, wf_report** out);

typedef struct wf_report_row {
  const char* name; /* valid while the report lives */
  int trials;
  int successes;
  double ratio;
} wf_report_row;

WF_API size_t wf_report_size(const wf_report* report);
WF_API wf_status wf_report_row_at(const wf_report* report, size_t index, wf_report_row* out);
WF_API wf_status wf_report_format(const wf_report* report, char** out_text);
WF_API wf_status wf_report_write_csv(const wf_report* report, const char* path);
WF_API void wf_report_destroy(wf_report* report);

typedef struct wf_server_options {
  const char* address;
  unsigned short port; /* 0 picks a free port */
  int command_delay_ms;
  int telemetry_every;
  int strict_clock;
  const char* console_dir; /* or NULL */
  uint64_t seed;
} wf_server_options;

WF_API void wf_server_options_init(wf_server_options* options);
WF_API wf_status wf_server_start(const wf_checkpoint* checkpoint, const wf_server_options* options, wf_server** out);
WF_API unsigned short wf_server_port(const wf_server* server);
WF_API void wf_server_destroy(wf_server* server); /* stops serving */

#ifdef __cplusplus
}
#endif

#endif /* WAYFARER_H */
