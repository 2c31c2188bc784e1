#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "wayfarer/trainer.hpp"

namespace wayfarer::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("wayfarer_test_" + std::to_string(::getpid()) + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Small, fast training config for mechanics tests.
inline train::TrainConfig tiny_config(int variant = 5, sim::AgentKind kind = sim::AgentKind::point_mass) {
  train::TrainConfig c;
  c.variant = variant;
  c.episode.agent_kind = kind;
  c.policy_hidden = {8, 8};
  c.value_hidden = {8};
  c.episodes_per_batch = 3;
  c.n_iterations = 2;
  c.seed = 11;
  train::apply_variant(c);
  return c;
}

// Linear point-mass controller (no hidden layers) steering toward the observed
// current goal: action = 0.5/m * position error - 0.75 s/m * velocity.
inline train::Checkpoint goal_seeking_checkpoint() {
  train::TrainConfig c;
  c.variant = 5;
  c.episode.agent_kind = sim::AgentKind::point_mass;
  c.policy_hidden = {};
  c.value_hidden = {};
  train::apply_variant(c);
  train::Checkpoint ckpt = train::initial_checkpoint(c);
  for (double& w : ckpt.policy.flat()) w = 0.0;
  auto w = ckpt.policy.weights(0);  // 2 x 14, row-major
  const int in = 14;
  const double k = 0.5 / c.episode.scale.pos;
  const double d = 0.75 / c.episode.scale.vel;
  w[0 * in + 0] = -k;  // x
  w[0 * in + 2] = -d;  // vx
  w[0 * in + 10] = k;  // current goal x
  w[1 * in + 1] = -k;
  w[1 * in + 3] = -d;
  w[1 * in + 11] = k;
  ckpt.head.log_std.assign(2, -3.0);
  return ckpt;
}

}  // namespace wayfarer::testing
