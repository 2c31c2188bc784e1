// Command-line front end. Talks to the library only through the C API.
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "wayfarer/wayfarer.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kRuntime = 2 };

int exit_code(wf_status status) {
  switch (status) {
    case WF_OK: return kOk;
    case WF_ERR_INVALID_ARGUMENT:
    case WF_ERR_CONFIG:
    case WF_ERR_VERSION: return kUsage;
    default: return kRuntime;
  }
}

// Prints the library error and returns the matching exit code.
int report(wf_status status, const char* context) {
  std::fprintf(stderr, "wayfarer %s: %s\n", context, wf_last_error());
  return exit_code(status);
}

std::atomic<bool> interrupted{false};
extern "C" void on_signal(int) { interrupted = true; }

struct TrainArgs {
  std::string config_path;
  int variant = 0;
  std::string agent;
  int iterations = -1;
  std::string seed;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  int log_every = 10;
  bool quiet = false;
};

struct EvalArgs {
  std::string checkpoint;
  std::string suite = "builtin";
  std::string waypoints;
  int trials = 10;
  bool deterministic = false;
  std::string seed;
  std::string export_traj;
  std::string out_dir = "out";
};

struct ServeArgs {
  std::string checkpoint;
  std::string address = "127.0.0.1";
  unsigned short port = 8765;
  int delay_ms = 0;
  int telemetry_every = 2;
  bool strict_clock = false;
  std::string console_dir;
};

struct InspectArgs {
  std::string checkpoint;
  std::string config_path;
};

const char* env_seed() {
  const char* s = std::getenv("WAYFARER_SEED");
  return (s && *s) ? s : nullptr;
}

int run_train(const TrainArgs& args) {
  wf_config* config = nullptr;
  wf_status st = args.config_path.empty() ? wf_config_create(&config) : wf_config_load(args.config_path.c_str(), &config);
  if (st != WF_OK) return report(st, "train");
  std::unique_ptr<wf_config, decltype(&wf_config_destroy)> guard(config, wf_config_destroy);

  std::vector<std::string> assignments;
  if (args.variant != 0) assignments.push_back("variant=" + std::to_string(args.variant));
  if (!args.agent.empty()) assignments.push_back("episode.agent=\"" + args.agent + "\"");
  if (args.iterations >= 0) assignments.push_back("iterations=" + std::to_string(args.iterations));
  if (!args.seed.empty()) {
    assignments.push_back("seed=" + args.seed);
  } else if (const char* s = env_seed(); s && !wf_config_has(config, "seed")) {
    assignments.push_back(std::string("seed=") + s);
  }
  assignments.insert(assignments.end(), args.overrides.begin(), args.overrides.end());
  for (const auto& a : assignments) {
    if ((st = wf_config_set(config, a.c_str())) != WF_OK) return report(st, "train");
  }

  std::error_code ec;
  std::filesystem::create_directories(args.out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "wayfarer train: cannot create %s: %s\n", args.out_dir.c_str(), ec.message().c_str());
    return kRuntime;
  }
  char* resolved = nullptr;
  if ((st = wf_config_to_json(config, &resolved)) != WF_OK) return report(st, "train");
  if (FILE* f = std::fopen((std::filesystem::path(args.out_dir) / "config.json").c_str(), "w")) {
    std::fprintf(f, "%s\n", resolved);
    std::fclose(f);
  }
  wf_string_free(resolved);

  struct Progress {
    int every;
    bool quiet;
  } progress{std::max(1, args.log_every), args.quiet};
  auto on_iteration = [](const wf_iteration_metrics* m, void* user) {
    const auto* p = static_cast<const Progress*>(user);
    if (p->quiet || m->iteration % p->every != 0) return;
    std::printf("iter %6ld  steps %9ld  return %9.2f  len %7.1f  waypoints %5.2f  entropy %7.3f\n", m->iteration,
                m->env_steps, m->mean_return, m->mean_episode_len, m->mean_waypoints, m->entropy);
    std::fflush(stdout);
  };
  st = wf_train(config, args.out_dir.c_str(), on_iteration, &progress, nullptr);
  if (st != WF_OK) return report(st, "train");
  if (!args.quiet) {
    std::printf("wrote %s/checkpoints/final.json and %s/metrics.csv\n", args.out_dir.c_str(), args.out_dir.c_str());
  }
  return kOk;
}

int run_eval(const EvalArgs& args) {
  wf_checkpoint* ckpt = nullptr;
  wf_status st = wf_checkpoint_load(args.checkpoint.c_str(), &ckpt);
  if (st != WF_OK) return report(st, "eval");
  std::unique_ptr<wf_checkpoint, decltype(&wf_checkpoint_destroy)> guard(ckpt, wf_checkpoint_destroy);

  wf_eval_options options;
  wf_eval_options_init(&options);
  options.trials = args.trials;
  options.deterministic = args.deterministic ? 1 : 0;
  const std::string seed = !args.seed.empty() ? args.seed : (env_seed() ? env_seed() : "0");
  try {
    options.seed = std::stoull(seed);
  } catch (const std::exception&) {
    std::fprintf(stderr, "wayfarer eval: seed '%s' is not an unsigned integer\n", seed.c_str());
    return kUsage;
  }
  if (!args.waypoints.empty()) options.waypoints = args.waypoints.c_str();
  if (!args.export_traj.empty()) options.traj_dir = args.export_traj.c_str();

  wf_report* rep = nullptr;
  if ((st = wf_evaluate(ckpt, &options, &rep)) != WF_OK) return report(st, "eval");
  std::unique_ptr<wf_report, decltype(&wf_report_destroy)> rep_guard(rep, wf_report_destroy);

  char* table = nullptr;
  if ((st = wf_report_format(rep, &table)) != WF_OK) return report(st, "eval");
  std::fputs(table, stdout);
  wf_string_free(table);

  std::error_code ec;
  std::filesystem::create_directories(args.out_dir, ec);
  const std::string csv = (std::filesystem::path(args.out_dir) / "reports.csv").string();
  if ((st = wf_report_write_csv(rep, csv.c_str())) != WF_OK) return report(st, "eval");
  std::printf("wrote %s\n", csv.c_str());
  return kOk;
}

int run_serve(const ServeArgs& args) {
  wf_checkpoint* ckpt = nullptr;
  wf_status st = wf_checkpoint_load(args.checkpoint.c_str(), &ckpt);
  if (st != WF_OK) return report(st, "serve");
  std::unique_ptr<wf_checkpoint, decltype(&wf_checkpoint_destroy)> guard(ckpt, wf_checkpoint_destroy);

  wf_server_options options;
  wf_server_options_init(&options);
  options.address = args.address.c_str();
  options.port = args.port;
  options.command_delay_ms = args.delay_ms;
  options.telemetry_every = args.telemetry_every;
  options.strict_clock = args.strict_clock ? 1 : 0;
  if (!args.console_dir.empty()) options.console_dir = args.console_dir.c_str();
  if (const char* s = env_seed()) options.seed = std::strtoull(s, nullptr, 10);

  wf_server* server = nullptr;
  if ((st = wf_server_start(ckpt, &options, &server)) != WF_OK) return report(st, "serve");
  std::printf("serving on http://%s:%u  (websocket /ws, command delay %d ms)\n", args.address.c_str(),
              static_cast<unsigned>(wf_server_port(server)), args.delay_ms);
  std::fflush(stdout);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  wf_server_destroy(server);
  return kOk;
}

int run_inspect(const InspectArgs& args) {
  char* text = nullptr;
  wf_status st;
  if (!args.config_path.empty()) {
    wf_config* config = nullptr;
    if ((st = wf_config_load(args.config_path.c_str(), &config)) != WF_OK) return report(st, "inspect");
    st = wf_config_to_json(config, &text);
    wf_config_destroy(config);
  } else if (!args.checkpoint.empty()) {
    wf_checkpoint* ckpt = nullptr;
    if ((st = wf_checkpoint_load(args.checkpoint.c_str(), &ckpt)) != WF_OK) return report(st, "inspect");
    st = wf_checkpoint_describe(ckpt, &text);
    wf_checkpoint_destroy(ckpt);
  } else {
    wf_config* config = nullptr;
    wf_config_create(&config);
    st = wf_config_to_json(config, &text);
    wf_config_destroy(config);
  }
  if (st != WF_OK) return report(st, "inspect");
  std::printf("%s\n", text);
  wf_string_free(text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wayfarer: goal-conditioned locomotion training, evaluation and teleoperation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", wf_version());

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a policy variant and write checkpoints and metrics");
  train_cmd->add_option("--config", train.config_path, "JSON config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--variant", train.variant, "Policy variant 1..5")->check(CLI::Range(1, 5));
  train_cmd->add_option("--agent", train.agent, "Agent kind")->check(CLI::IsMember({"point-mass", "ant-proxy"}));
  train_cmd->add_option("--iterations", train.iterations, "Training iterations")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seed", train.seed, "Seed (default: $WAYFARER_SEED, then the config)");
  train_cmd->add_option("--set", train.overrides, "Config override key=value (repeatable)");
  train_cmd->add_option("--out", train.out_dir, "Output directory")->capture_default_str();
  train_cmd->add_option("--log-every", train.log_every, "Progress line cadence")->capture_default_str();
  train_cmd->add_flag("--quiet", train.quiet, "No progress output");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the built-in suite or a custom path");
  eval_cmd->add_option("checkpoint", eval.checkpoint, "Checkpoint file")->required();
  auto* suite_opt = eval_cmd->add_option("--suite", eval.suite, "Test suite")->check(CLI::IsMember({"builtin"}));
  eval_cmd->add_option("--waypoints", eval.waypoints, "Custom path \"x1,y1;x2,y2\"")->excludes(suite_opt);
  eval_cmd->add_option("--trials", eval.trials, "Trials per case")->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_flag("--deterministic", eval.deterministic, "Use the policy mean instead of sampling");
  eval_cmd->add_option("--seed", eval.seed, "Evaluation seed");
  eval_cmd->add_option("--export-traj", eval.export_traj, "Directory for per-trial trajectory CSVs");
  eval_cmd->add_option("--out", eval.out_dir, "Directory for reports.csv")->capture_default_str();

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run a live teleoperation session for a checkpoint");
  serve_cmd->add_option("checkpoint", serve.checkpoint, "Checkpoint file")->required();
  serve_cmd->add_option("--address", serve.address, "Listen address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "Listen port (0 = any)")->capture_default_str();
  serve_cmd->add_option("--command-delay-ms", serve.delay_ms, "One-way command delay")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  serve_cmd->add_option("--telemetry-every", serve.telemetry_every, "Telemetry cadence in simulation steps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve_cmd->add_flag("--strict-clock", serve.strict_clock, "End episodes on timeout");
  serve_cmd->add_option("--console-dir", serve.console_dir, "Static console bundle served at /")
      ->check(CLI::ExistingDirectory);

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a checkpoint or print a resolved config");
  inspect_cmd->add_option("checkpoint", inspect.checkpoint, "Checkpoint file");
  inspect_cmd->add_option("--config", inspect.config_path, "Config file to resolve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (train_cmd->parsed()) return run_train(train);
  if (eval_cmd->parsed()) return run_eval(eval);
  if (serve_cmd->parsed()) return run_serve(serve);
  return run_inspect(inspect);
}
