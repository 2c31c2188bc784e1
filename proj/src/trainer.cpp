#include "wayfarer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include "wayfarer/error.hpp"
#include "wayfarer/persist.hpp"

namespace wayfarer::train {

namespace {

constexpr Eigen::Index kChunk = 512;

Rng episode_rng(std::uint64_t seed, std::uint64_t batch_index, std::uint64_t episode) {
  return Rng::derive(seed, {0x726f6c6cULL, batch_index, episode});
}

}  // namespace

PolicyVariant PolicyVariant::from_id(int id) {
  using env::InfoStyle;
  using env::TrainingStyle;
  switch (id) {
    case 1: return {1, TrainingStyle::single_point, InfoStyle::state_only};
    case 2: return {2, TrainingStyle::random_waypoints, InfoStyle::state_only};
    case 3: return {3, TrainingStyle::random_waypoints, InfoStyle::state_noise};
    case 4: return {4, TrainingStyle::single_point, InfoStyle::state_goal};
    case 5: return {5, TrainingStyle::random_waypoints, InfoStyle::state_goal};
    default: fail(ErrorKind::config, "variant must be in 1..5, got " + std::to_string(id));
  }
}

void apply_variant(TrainConfig& config) {
  const PolicyVariant v = PolicyVariant::from_id(config.variant);
  config.episode.training_style = v.training_style;
  config.episode.info_style = v.info_style;
}

void validate(const TrainConfig& c) {
  const PolicyVariant v = PolicyVariant::from_id(c.variant);
  if (c.episode.training_style != v.training_style || c.episode.info_style != v.info_style) {
    fail(ErrorKind::config, "episode styles do not match variant " + std::to_string(c.variant));
  }
  env::validate(c.episode);
  if (c.n_iterations < 0) fail(ErrorKind::config, "iterations must be >= 0");
  if (c.episodes_per_batch < 1) fail(ErrorKind::config, "episodes_per_batch must be >= 1");
  if (!(c.gamma > 0 && c.gamma <= 1)) fail(ErrorKind::config, "gamma must lie in (0, 1]");
  if (!(c.policy_lr > 0) || !(c.value_lr > 0)) fail(ErrorKind::config, "learning rates must be > 0");
  if (!std::isfinite(c.entropy_coef) || c.entropy_coef < 0) fail(ErrorKind::config, "entropy_coef must be >= 0");
  if (!(c.init_log_std >= nn::GaussianHead::kMinLogStd && c.init_log_std <= nn::GaussianHead::kMaxLogStd)) {
    fail(ErrorKind::config, "init_log_std must lie in [-3, 1]");
  }
  if (c.workers < 1) fail(ErrorKind::config, "workers must be >= 1");
  if (c.checkpoint_every < 0) fail(ErrorKind::config, "checkpoint_every must be >= 0");
  nn::validate(policy_dims(c));
  nn::validate(value_dims(c));
}

nn::LayerDims policy_dims(const TrainConfig& c) {
  return {env::observation_dim(c.episode.agent_kind, c.episode.info_style), c.policy_hidden,
          sim::action_dim(c.episode.agent_kind)};
}

nn::LayerDims value_dims(const TrainConfig& c) {
  return {env::observation_dim(c.episode.agent_kind, c.episode.info_style), c.value_hidden, 1};
}

Checkpoint initial_checkpoint(const TrainConfig& config) {
  validate(config);
  Rng rng = Rng::derive(config.seed, {0x696e6974ULL});
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.policy = nn::init_params(policy_dims(config), rng);
  ckpt.value = nn::init_params(value_dims(config), rng);
  ckpt.head.log_std.assign(static_cast<std::size_t>(sim::action_dim(config.episode.agent_kind)), config.init_log_std);
  return ckpt;
}

std::vector<double> policy_mean(const Checkpoint& checkpoint, std::span<const double> observation) {
  return nn::mlp_evaluate(checkpoint.policy, observation);
}

std::size_t RolloutBatch::step_count() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.steps.size();
  return n;
}

EpisodeRecord run_episode(const Checkpoint& checkpoint, env::Environment& environment, Rng& rng) {
  EpisodeRecord record;
  std::vector<double> observation = environment.reset(rng);
  while (!environment.done()) {
    const std::vector<double> mean = policy_mean(checkpoint, observation);
    nn::SampledAction sampled = nn::sample_action(mean, checkpoint.head, rng);
    env::StepResult result = environment.step(sampled.action);
    record.total_reward += result.reward;
    record.steps.push_back({std::move(observation), std::move(sampled.action), sampled.log_prob, result.reward});
    observation = std::move(result.observation);
  }
  record.waypoints_reached = environment.waypoints_reached();
  record.done_reason = *environment.done_reason();
  return record;
}

RolloutBatch collect_rollouts(const Checkpoint& checkpoint, const TrainConfig& config, std::uint64_t batch_index) {
  const int n = config.episodes_per_batch;
  RolloutBatch batch;
  batch.episodes.resize(static_cast<std::size_t>(n));

  auto work = [&](int worker, int stride) {
    env::Environment environment(config.episode);
    for (int e = worker; e < n; e += stride) {
      Rng rng = episode_rng(config.seed, batch_index, static_cast<std::uint64_t>(e));
      batch.episodes[static_cast<std::size_t>(e)] = run_episode(checkpoint, environment, rng);
    }
  };

  const int workers = std::min(config.workers, n);
  if (workers <= 1) {
    work(0, 1);
    return batch;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        work(w, workers);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return batch;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> returns(rewards.size());
  double running = 0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    running = rewards[i] + gamma * running;
    returns[i] = running;
  }
  return returns;
}

namespace {

// Observations of steps [begin, begin + count) of the flattened batch, one per column.
nn::Matrix gather_observations(const std::vector<const StepRecord*>& steps, std::size_t begin, std::size_t count) {
  const auto dim = static_cast<Eigen::Index>(steps[begin]->observation.size());
  nn::Matrix m(dim, static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < count; ++j) {
    m.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(steps[begin + j]->observation.data(), dim);
  }
  return m;
}

std::vector<const StepRecord*> flatten(const RolloutBatch& batch) {
  std::vector<const StepRecord*> steps;
  steps.reserve(batch.step_count());
  for (const auto& e : batch.episodes) {
    for (const auto& s : e.steps) steps.push_back(&s);
  }
  return steps;
}

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << "non-finite " << what << " gradient at index " << i << " (value " << values[i] << ")";
      fail(ErrorKind::runtime, msg.str());
    }
  }
}

}  // namespace

AnnotatedBatch compute_returns_advantages(const RolloutBatch& batch, double gamma, const nn::MlpParams& value_network) {
  const auto steps = flatten(batch);
  if (steps.empty()) fail(ErrorKind::invalid_argument, "compute_returns_advantages: empty batch");

  AnnotatedBatch out;
  out.returns.reserve(steps.size());
  for (const auto& e : batch.episodes) {
    std::vector<double> rewards;
    rewards.reserve(e.steps.size());
    for (const auto& s : e.steps) rewards.push_back(s.reward);
    const auto r = discounted_returns(rewards, gamma);
    out.returns.insert(out.returns.end(), r.begin(), r.end());
  }

  out.values.resize(steps.size());
  for (std::size_t begin = 0; begin < steps.size(); begin += kChunk) {
    const std::size_t count = std::min<std::size_t>(kChunk, steps.size() - begin);
    const nn::ForwardResult fwd = nn::mlp_forward(value_network, gather_observations(steps, begin, count));
    for (std::size_t j = 0; j < count; ++j) out.values[begin + j] = fwd.output(0, static_cast<Eigen::Index>(j));
  }

  const std::size_t n = steps.size();
  out.advantages.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.advantages[i] = out.returns[i] - out.values[i];
  const double mean = std::accumulate(out.advantages.begin(), out.advantages.end(), 0.0) / static_cast<double>(n);
  double var = 0;
  for (double a : out.advantages) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / static_cast<double>(n));
  for (double& a : out.advantages) a = (a - mean) / (stddev + 1e-8);
  return out;
}

OptimizerState OptimizerState::adam(const TrainConfig& config) {
  OptimizerState s;
  s.policy = std::make_unique<Adam>(config.policy_lr);
  s.head = std::make_unique<Adam>(config.policy_lr);
  s.value = std::make_unique<Adam>(config.value_lr);
  return s;
}

UpdateMetrics update(Checkpoint& checkpoint, const RolloutBatch& batch, const AnnotatedBatch& annotated,
                     OptimizerState& optimizers) {
  const auto steps = flatten(batch);
  const std::size_t n = steps.size();
  if (n == 0) fail(ErrorKind::invalid_argument, "update: empty batch");
  if (annotated.advantages.size() != n || annotated.returns.size() != n) {
    fail(ErrorKind::invalid_argument, "update: annotations do not match the batch");
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  const double entropy_coef = checkpoint.config.entropy_coef;
  const std::size_t action_dim = checkpoint.head.log_std.size();

  std::vector<double> policy_grad(checkpoint.policy.size(), 0.0);
  std::vector<double> value_grad(checkpoint.value.size(), 0.0);
  std::vector<double> head_grad(action_dim, 0.0);
  std::vector<double> inv_var(action_dim);
  for (std::size_t d = 0; d < action_dim; ++d) inv_var[d] = std::exp(-2.0 * checkpoint.head.log_std[d]);

  UpdateMetrics metrics;
  double surrogate = 0;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    const std::size_t count = std::min<std::size_t>(kChunk, n - begin);
    const nn::Matrix obs = gather_observations(steps, begin, count);

    const nn::ForwardResult pfwd = nn::mlp_forward(checkpoint.policy, obs);
    nn::Matrix mean_grad(static_cast<Eigen::Index>(action_dim), static_cast<Eigen::Index>(count));
    for (std::size_t j = 0; j < count; ++j) {
      const StepRecord& s = *steps[begin + j];
      const double adv = annotated.advantages[begin + j];
      const auto col = static_cast<Eigen::Index>(j);
      std::vector<double> mean(action_dim);
      for (std::size_t d = 0; d < action_dim; ++d) mean[d] = pfwd.output(static_cast<Eigen::Index>(d), col);
      surrogate += nn::log_prob(mean, checkpoint.head, s.action) * adv;
      for (std::size_t d = 0; d < action_dim; ++d) {
        const double diff = s.action[d] - mean[d];
        mean_grad(static_cast<Eigen::Index>(d), col) = -adv * inv_n * diff * inv_var[d];
        head_grad[d] += -adv * inv_n * (diff * diff * inv_var[d] - 1.0);
      }
    }
    const nn::Gradients pg = nn::mlp_backward(checkpoint.policy, pfwd.cache, mean_grad);
    for (std::size_t i = 0; i < policy_grad.size(); ++i) policy_grad[i] += pg.params[i];

    const nn::ForwardResult vfwd = nn::mlp_forward(checkpoint.value, obs);
    nn::Matrix value_out_grad(1, static_cast<Eigen::Index>(count));
    for (std::size_t j = 0; j < count; ++j) {
      const double err = vfwd.output(0, static_cast<Eigen::Index>(j)) - annotated.returns[begin + j];
      metrics.value_loss += err * err * inv_n;
      value_out_grad(0, static_cast<Eigen::Index>(j)) = 2.0 * err * inv_n;
    }
    const nn::Gradients vg = nn::mlp_backward(checkpoint.value, vfwd.cache, value_out_grad);
    for (std::size_t i = 0; i < value_grad.size(); ++i) value_grad[i] += vg.params[i];
  }

  // d(-entropy_coef * H)/d log_std = -entropy_coef per dimension.
  for (double& g : head_grad) g -= entropy_coef;

  metrics.entropy = nn::entropy(checkpoint.head);
  metrics.policy_loss = -surrogate * inv_n - entropy_coef * metrics.entropy;

  require_finite(policy_grad, "policy");
  require_finite(head_grad, "log_std");
  require_finite(value_grad, "value");

  optimizers.policy->step(checkpoint.policy.flat(), policy_grad);
  optimizers.head->step(checkpoint.head.log_std, head_grad);
  checkpoint.head.clamp();
  optimizers.value->step(checkpoint.value.flat(), value_grad);
  return metrics;
}

Checkpoint train(const TrainConfig& config, const TrainOutput& output) {
  Checkpoint checkpoint = initial_checkpoint(config);
  OptimizerState optimizers = OptimizerState::adam(config);

  std::optional<MetricsLog> log;
  if (output.directory) {
    std::filesystem::create_directories(*output.directory / "checkpoints");
    log.emplace(*output.directory / "metrics.csv");
  }

  long env_steps = 0;
  for (int it = 0; it < config.n_iterations; ++it) {
    const RolloutBatch batch = collect_rollouts(checkpoint, config, static_cast<std::uint64_t>(it));
    const AnnotatedBatch annotated = compute_returns_advantages(batch, config.gamma, checkpoint.value);

    IterationMetrics m;
    m.iteration = it;
    env_steps += static_cast<long>(batch.step_count());
    m.env_steps = env_steps;
    for (const auto& e : batch.episodes) {
      m.mean_return += e.total_reward;
      m.mean_episode_len += static_cast<double>(e.steps.size());
      m.mean_waypoints += static_cast<double>(e.waypoints_reached);
    }
    const double episodes = static_cast<double>(batch.episodes.size());
    m.mean_return /= episodes;
    m.mean_episode_len /= episodes;
    m.mean_waypoints /= episodes;

    const UpdateMetrics um = update(checkpoint, batch, annotated, optimizers);
    checkpoint.iteration = it + 1;
    m.policy_loss = um.policy_loss;
    m.value_loss = um.value_loss;
    m.entropy = um.entropy;

    if (log) log->append(m);
    if (output.on_iteration) output.on_iteration(m);
    if (output.directory && config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "iter_%06d.json", it + 1);
      save_checkpoint(checkpoint, *output.directory / "checkpoints" / name);
    }
  }

  if (output.directory) save_checkpoint(checkpoint, *output.directory / "checkpoints" / "final.json");
  return checkpoint;
}

}  // namespace wayfarer::train
