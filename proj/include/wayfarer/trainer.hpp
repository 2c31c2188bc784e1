#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "wayfarer/env.hpp"
#include "wayfarer/nn.hpp"
#include "wayfarer/optimizer.hpp"

namespace wayfarer::train {

// The five training-style x information-style combinations.
struct PolicyVariant {
  int id = 5;
  env::TrainingStyle training_style = env::TrainingStyle::random_waypoints;
  env::InfoStyle info_style = env::InfoStyle::state_goal;

  static PolicyVariant from_id(int id);
};

struct TrainConfig {
  int variant = 5;
  env::EpisodeConfig episode;  // training/info style always follow `variant`
  int n_iterations = 300;
  int episodes_per_batch = 8;
  double gamma = 0.99;
  double policy_lr = 3e-4;
  double value_lr = 1e-3;
  double entropy_coef = 0.01;
  double init_log_std = -0.5;
  std::uint64_t seed = 0;
  std::vector<int> policy_hidden = std::vector<int>(6, 128);
  std::vector<int> value_hidden = {64, 64};
  int workers = 1;
  int checkpoint_every = 0;  // 0: only the final checkpoint is written

  bool operator==(const TrainConfig&) const = default;
};

// Copies the variant's styles into the episode config.
void apply_variant(TrainConfig& config);
void validate(const TrainConfig& config);

nn::LayerDims policy_dims(const TrainConfig& config);
nn::LayerDims value_dims(const TrainConfig& config);

// Self-contained bundle: evaluating or serving needs nothing else.
struct Checkpoint {
  TrainConfig config;
  nn::MlpParams policy;
  nn::GaussianHead head;
  nn::MlpParams value;
  long iteration = 0;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint initial_checkpoint(const TrainConfig& config);

std::vector<double> policy_mean(const Checkpoint& checkpoint, std::span<const double> observation);

struct StepRecord {
  std::vector<double> observation;
  std::vector<double> action;  // unclamped sample
  double log_prob = 0;
  double reward = 0;
};

struct EpisodeRecord {
  std::vector<StepRecord> steps;
  double total_reward = 0;
  std::size_t waypoints_reached = 0;
  env::DoneReason done_reason = env::DoneReason::timeout;
};

struct RolloutBatch {
  std::vector<EpisodeRecord> episodes;
  std::size_t step_count() const;
};

// Runs `episodes_per_batch` stochastic episodes. Episode e uses the random
// stream derived from (seed, batch_index, e), so the batch does not depend on
// how episodes are spread over workers.
RolloutBatch collect_rollouts(const Checkpoint& checkpoint, const TrainConfig& config, std::uint64_t batch_index);

EpisodeRecord run_episode(const Checkpoint& checkpoint, env::Environment& environment, Rng& rng);

// Flat, batch-ordered (episode-major, time-ordered) annotations.
struct AnnotatedBatch {
  std::vector<double> returns;
  std::vector<double> values;
  std::vector<double> advantages;  // normalized
};

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);
AnnotatedBatch compute_returns_advantages(const RolloutBatch& batch, double gamma, const nn::MlpParams& value_network);

struct OptimizerState {
  std::unique_ptr<Optimizer> policy;
  std::unique_ptr<Optimizer> head;
  std::unique_ptr<Optimizer> value;

  static OptimizerState adam(const TrainConfig& config);
};

struct UpdateMetrics {
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
};

// One policy-gradient step with a learned baseline and entropy bonus, plus one
// regression step of the value network. Throws Error(runtime) on a non-finite gradient.
UpdateMetrics update(Checkpoint& checkpoint, const RolloutBatch& batch, const AnnotatedBatch& annotated,
                     OptimizerState& optimizers);

struct IterationMetrics {
  long iteration = 0;
  long env_steps = 0;  // cumulative
  double mean_return = 0;
  double mean_episode_len = 0;
  double mean_waypoints = 0;
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
};

struct TrainOutput {
  std::optional<std::filesystem::path> directory;  // checkpoints/ and metrics.csv go here
  std::function<void(const IterationMetrics&)> on_iteration;
};

Checkpoint train(const TrainConfig& config, const TrainOutput& output = {});

}  // namespace wayfarer::train
