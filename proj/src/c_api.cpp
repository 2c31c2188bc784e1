#include "wayfarer/wayfarer.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "wayfarer/error.hpp"
#include "wayfarer/eval.hpp"
#include "wayfarer/persist.hpp"
#include "wayfarer/teleop.hpp"

using namespace wayfarer;

struct wf_config {
  json document = json::object();
};

struct wf_checkpoint {
  train::Checkpoint value;
};

struct wf_report {
  std::vector<eval::SuccessReport> reports;
};

struct wf_server {
  std::unique_ptr<teleop::TeleopServer> server;
};

namespace {

thread_local std::string last_error;

wf_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return WF_ERR_INVALID_ARGUMENT;
    case ErrorKind::config: return WF_ERR_CONFIG;
    case ErrorKind::io: return WF_ERR_IO;
    case ErrorKind::version: return WF_ERR_VERSION;
    case ErrorKind::runtime: return WF_ERR_RUNTIME;
    case ErrorKind::state: return WF_ERR_STATE;
  }
  return WF_ERR_RUNTIME;
}

template <typename F>
wf_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return WF_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return WF_ERR_RUNTIME;
  } catch (const std::exception& e) {
    last_error = e.what();
    return WF_ERR_RUNTIME;
  }
}

void require(bool condition, const char* what) {
  if (!condition) fail(ErrorKind::invalid_argument, what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* wf_version(void) { return "0.1.0"; }

const char* wf_last_error(void) { return last_error.c_str(); }

void wf_string_free(char* s) { std::free(s); }

wf_status wf_config_create(wf_config** out) {
  return guarded([&] {
    require(out != nullptr, "wf_config_create: out is NULL");
    *out = new wf_config{};
  });
}

wf_status wf_config_load(const char* path, wf_config** out) {
  return guarded([&] {
    require(path && out, "wf_config_load: NULL argument");
    json document = read_json_file(path);
    try {
      train_config_from_json(document);
    } catch (const Error& e) {
      fail(e.kind(), std::string(path) + ": " + e.what());
    }
    *out = new wf_config{std::move(document)};
  });
}

wf_status wf_config_set(wf_config* config, const char* assignment) {
  return guarded([&] {
    require(config && assignment, "wf_config_set: NULL argument");
    json candidate = config->document;
    apply_override(candidate, assignment);
    try {
      train_config_from_json(candidate);
    } catch (const Error& e) {
      fail(e.kind(), std::string("override '") + assignment + "': " + e.what());
    }
    config->document = std::move(candidate);
  });
}

int wf_config_has(const wf_config* config, const char* dotted_key) {
  if (!config || !dotted_key) return 0;
  const json* node = &config->document;
  std::string_view key(dotted_key);
  while (true) {
    const auto dot = key.find('.');
    const std::string part(key.substr(0, dot));
    if (!node->is_object() || !node->contains(part)) return 0;
    node = &(*node)[part];
    if (dot == std::string_view::npos) return 1;
    key.remove_prefix(dot + 1);
  }
}

wf_status wf_config_to_json(const wf_config* config, char** out_json) {
  return guarded([&] {
    require(config && out_json, "wf_config_to_json: NULL argument");
    *out_json = copy_string(to_json(train_config_from_json(config->document)).dump(2));
  });
}

void wf_config_destroy(wf_config* config) { delete config; }

wf_status wf_train(const wf_config* config, const char* out_dir, wf_progress_fn progress, void* user,
                   wf_checkpoint** out) {
  return guarded([&] {
    require(config != nullptr, "wf_train: config is NULL");
    const train::TrainConfig cfg = train_config_from_json(config->document);
    train::TrainOutput output;
    if (out_dir) output.directory = std::filesystem::path(out_dir);
    if (progress) {
      output.on_iteration = [progress, user](const train::IterationMetrics& m) {
        const wf_iteration_metrics cm{m.iteration,      m.env_steps,   m.mean_return, m.mean_episode_len,
                                      m.mean_waypoints, m.policy_loss, m.value_loss,  m.entropy};
        progress(&cm, user);
      };
    }
    train::Checkpoint result;
    try {
      result = train::train(cfg, output);
    } catch (const std::filesystem::filesystem_error& e) {
      fail(ErrorKind::io, e.what());
    }
    if (out) *out = new wf_checkpoint{std::move(result)};
  });
}

wf_status wf_checkpoint_load(const char* path, wf_checkpoint** out) {
  return guarded([&] {
    require(path && out, "wf_checkpoint_load: NULL argument");
    *out = new wf_checkpoint{load_checkpoint(path)};
  });
}

wf_status wf_checkpoint_save(const wf_checkpoint* checkpoint, const char* path) {
  return guarded([&] {
    require(checkpoint && path, "wf_checkpoint_save: NULL argument");
    save_checkpoint(checkpoint->value, path);
  });
}

wf_status wf_checkpoint_describe(const wf_checkpoint* checkpoint, char** out_json) {
  return guarded([&] {
    require(checkpoint && out_json, "wf_checkpoint_describe: NULL argument");
    const auto& c = checkpoint->value;
    const auto& pd = c.policy.dims();
    const auto& vd = c.value.dims();
    const json summary = {
        {"variant", c.config.variant},
        {"agent", std::string(sim::to_string(c.config.episode.agent_kind))},
        {"training_style", std::string(env::to_string(c.config.episode.training_style))},
        {"info_style", std::string(env::to_string(c.config.episode.info_style))},
        {"iteration", c.iteration},
        {"seed", c.config.seed},
        {"policy_dims", {{"input", pd.input}, {"hidden", pd.hidden}, {"output", pd.output}}},
        {"value_dims", {{"input", vd.input}, {"hidden", vd.hidden}, {"output", vd.output}}},
        {"log_std", c.head.log_std},
        {"parameters", c.policy.size() + c.value.size() + c.head.log_std.size()}};
    *out_json = copy_string(summary.dump(2));
  });
}

void wf_checkpoint_destroy(wf_checkpoint* checkpoint) { delete checkpoint; }

void wf_eval_options_init(wf_eval_options* options) {
  if (!options) return;
  *options = wf_eval_options{0, 10, 0, nullptr, nullptr};
}

wf_status wf_evaluate(const wf_checkpoint* checkpoint, const wf_eval_options* options, wf_report** out) {
  return guarded([&] {
    require(checkpoint && options && out, "wf_evaluate: NULL argument");
    require(options->trials >= 1, "wf_evaluate: trials must be >= 1");
    const std::vector<eval::TestCase> cases = options->waypoints
                                                  ? std::vector{eval::parse_waypoints(options->waypoints, options->trials)}
                                                  : eval::builtin_suite(options->trials);
    const eval::EvalOptions eo{options->seed, options->deterministic != 0};
    auto report = std::make_unique<wf_report>();
    std::optional<std::filesystem::path> traj_dir;
    if (options->traj_dir) {
      traj_dir = options->traj_dir;
      std::error_code ec;
      std::filesystem::create_directories(*traj_dir, ec);
      if (ec) fail(ErrorKind::io, "cannot create " + traj_dir->string() + ": " + ec.message());
    }
    for (const auto& tc : cases) {
      report->reports.push_back(eval::success_ratio(checkpoint->value, tc, eo));
      if (traj_dir) {
        const auto& r = report->reports.back();
        for (std::size_t i = 0; i < r.trials.size(); ++i) {
          eval::export_trajectory(r.trials[i], *traj_dir / (tc.name + "_trial" + std::to_string(i) + ".csv"));
        }
      }
    }
    *out = report.release();
  });
}

size_t wf_report_size(const wf_report* report) { return report ? report->reports.size() : 0; }

wf_status wf_report_row_at(const wf_report* report, size_t index, wf_report_row* out) {
  return guarded([&] {
    require(report && out, "wf_report_row_at: NULL argument");
    require(index < report->reports.size(), "wf_report_row_at: index out of range");
    const auto& r = report->reports[index];
    *out = wf_report_row{r.test_case.name.c_str(), r.test_case.trials, static_cast<int>(r.successes), r.success_ratio};
  });
}

wf_status wf_report_format(const wf_report* report, char** out_text) {
  return guarded([&] {
    require(report && out_text, "wf_report_format: NULL argument");
    *out_text = copy_string(eval::format_report_table(report->reports));
  });
}

wf_status wf_report_write_csv(const wf_report* report, const char* path) {
  return guarded([&] {
    require(report && path, "wf_report_write_csv: NULL argument");
    eval::write_reports_csv(report->reports, path);
  });
}

void wf_report_destroy(wf_report* report) { delete report; }

void wf_server_options_init(wf_server_options* options) {
  if (!options) return;
  *options = wf_server_options{"127.0.0.1", 8765, 0, 2, 0, nullptr, 0};
}

wf_status wf_server_start(const wf_checkpoint* checkpoint, const wf_server_options* options, wf_server** out) {
  return guarded([&] {
    require(checkpoint && options && out, "wf_server_start: NULL argument");
    teleop::ServerOptions so;
    so.address = options->address ? options->address : "127.0.0.1";
    so.port = options->port;
    so.command_delay_ms = options->command_delay_ms;
    so.telemetry_every = options->telemetry_every;
    so.strict_clock = options->strict_clock != 0;
    if (options->console_dir) so.console_dir = std::filesystem::path(options->console_dir);
    so.seed = options->seed;
    auto server = std::make_unique<teleop::TeleopServer>(checkpoint->value, so);
    server->start();
    *out = new wf_server{std::move(server)};
  });
}

unsigned short wf_server_port(const wf_server* server) { return server ? server->server->port() : 0; }

void wf_server_destroy(wf_server* server) { delete server; }

}  // extern "C"
