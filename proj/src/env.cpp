#include "wayfarer/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wayfarer/error.hpp"

namespace wayfarer::env {

const Point& GoalQueue::current() const {
  if (exhausted()) fail(ErrorKind::state, "goal queue is exhausted");
  return waypoints[current_index];
}

const Point& GoalQueue::next() const {
  if (exhausted()) fail(ErrorKind::state, "goal queue is exhausted");
  return current_index + 1 < waypoints.size() ? waypoints[current_index + 1] : waypoints[current_index];
}

std::string_view to_string(TrainingStyle style) {
  return style == TrainingStyle::single_point ? "single-point" : "random-waypoints";
}

std::string_view to_string(InfoStyle style) {
  switch (style) {
    case InfoStyle::state_only: return "state-only";
    case InfoStyle::state_noise: return "state-noise";
    case InfoStyle::state_goal: return "state-goal";
  }
  return "?";
}

std::string_view to_string(DoneReason reason) {
  return reason == DoneReason::timeout ? "timeout" : "all-waypoints-reached";
}

void validate(const EpisodeConfig& c) {
  sim::validate(c.dynamics);
  auto positive = [](double v) { return std::isfinite(v) && v > 0; };
  if (!positive(c.boundary_x) || !positive(c.boundary_y)) fail(ErrorKind::config, "episode.boundary must be > 0");
  if (c.m_waypoints < 1) fail(ErrorKind::config, "episode.m_waypoints must be >= 1");
  if (!positive(c.t_ep)) fail(ErrorKind::config, "episode.t_ep must be > 0");
  if (!std::isfinite(c.t_inc) || c.t_inc < 0) fail(ErrorKind::config, "episode.t_inc must be >= 0");
  if (!positive(c.perimeter.half_extent)) fail(ErrorKind::config, "episode.perimeter.half_extent must be > 0");
  if (!std::isfinite(c.perimeter.center.x) || !std::isfinite(c.perimeter.center.y)) {
    fail(ErrorKind::config, "episode.perimeter.center must be finite");
  }
  if (!std::isfinite(c.reward.w_energy) || c.reward.w_energy < 0) fail(ErrorKind::config, "episode.reward.w_energy must be >= 0");
  if (!std::isfinite(c.reward.hit_bonus) || c.reward.hit_bonus < 0) fail(ErrorKind::config, "episode.reward.hit_bonus must be >= 0");
  if (!positive(c.scale.pos) || !positive(c.scale.vel)) fail(ErrorKind::config, "episode.scale entries must be > 0");
}

int proprio_dim(sim::AgentKind kind) { return kind == sim::AgentKind::ant_proxy ? 25 : 10; }

int observation_dim(sim::AgentKind kind, InfoStyle style) {
  return proprio_dim(kind) + (style == InfoStyle::state_only ? 0 : 4);
}

GoalQueue sample_waypoints(const TrainingPerimeter& perimeter, int m, Rng& rng) {
  if (m < 1) fail(ErrorKind::invalid_argument, "sample_waypoints: m must be >= 1");
  GoalQueue q;
  q.waypoints.reserve(static_cast<std::size_t>(m));
  const double h = perimeter.half_extent;
  for (int i = 0; i < m; ++i) {
    const double x = rng.uniform(perimeter.center.x - h, perimeter.center.x + h);
    const double y = rng.uniform(perimeter.center.y - h, perimeter.center.y + h);
    q.waypoints.push_back({x, y});
  }
  return q;
}

GoalQueue single_point_queue(int m) {
  if (m < 1) fail(ErrorKind::invalid_argument, "single_point_queue: m must be >= 1");
  GoalQueue q;
  q.waypoints.assign(static_cast<std::size_t>(m), Point{10.0, 10.0});
  return q;
}

bool check_waypoint_hit(Point pos, Point goal, double bx, double by) {
  return std::abs(pos.x - goal.x) < bx && std::abs(pos.y - goal.y) < by;
}

double reward(const sim::AgentState& prev, const sim::AgentState& next, std::span<const double> action, Point goal,
              const RewardWeights& weights, double dt, bool hit) {
  if (!(dt > 0)) fail(ErrorKind::invalid_argument, "reward: dt must be > 0");
  const double d_prev = std::hypot(prev.body.x - goal.x, prev.body.y - goal.y);
  const double d_next = std::hypot(next.body.x - goal.x, next.body.y - goal.y);
  const double velocity_to_goal = (d_prev - d_next) / dt;
  double energy = 0;
  for (double a : action) energy += a * a;
  return velocity_to_goal - weights.w_energy * energy + (hit ? weights.hit_bonus : 0.0);
}

std::vector<double> build_observation(const sim::AgentState& state, const GoalQueue& goals, InfoStyle style,
                                      std::span<const double> noise, const ObservationScale& scale) {
  const bool wants_noise = style == InfoStyle::state_noise;
  if (wants_noise != !noise.empty()) {
    fail(ErrorKind::invalid_argument, "build_observation: noise must be supplied iff the style is state-noise");
  }
  if (wants_noise && noise.size() != kNoiseDim) fail(ErrorKind::invalid_argument, "build_observation: noise needs 4 values");

  std::vector<double> obs;
  obs.reserve(static_cast<std::size_t>(observation_dim(state.kind, style)));
  const auto& b = state.body;
  if (state.kind == sim::AgentKind::ant_proxy) {
    for (double q : state.joints.q) obs.push_back(q);
    for (double qd : state.joints.qdot) obs.push_back(qd * scale.vel);
    obs.insert(obs.end(), {b.x * scale.pos, b.y * scale.pos, b.z * scale.pos});
    obs.insert(obs.end(), {b.vx * scale.vel, b.vy * scale.vel, b.vz * scale.vel});
    obs.insert(obs.end(), {b.roll, b.pitch, b.yaw});
  } else {
    obs.insert(obs.end(), {b.x * scale.pos, b.y * scale.pos, b.vx * scale.vel, b.vy * scale.vel});
    obs.insert(obs.end(), {b.yaw, b.yaw_rate, 0.0, 0.0, 0.0, 0.0});
  }

  if (style == InfoStyle::state_goal) {
    const Point cur = goals.current();
    const Point nxt = goals.next();
    obs.insert(obs.end(), {cur.x * scale.pos, cur.y * scale.pos, nxt.x * scale.pos, nxt.y * scale.pos});
  } else if (wants_noise) {
    obs.insert(obs.end(), noise.begin(), noise.end());
  }

  for (double v : obs) {
    if (!std::isfinite(v)) fail(ErrorKind::invalid_argument, "build_observation: non-finite entry");
  }
  return obs;
}

Environment::Environment(EpisodeConfig config) : config_(std::move(config)) {
  validate(config_);
  state_ = sim::zero_state(config_.agent_kind);
}

int Environment::observation_size() const { return observation_dim(config_.agent_kind, config_.info_style); }

const std::vector<double>& Environment::reset(Rng& rng) {
  GoalQueue q = config_.training_style == TrainingStyle::random_waypoints
                    ? sample_waypoints(config_.perimeter, config_.m_waypoints, rng)
                    : single_point_queue(config_.m_waypoints);
  begin_episode(std::move(q.waypoints), rng);
  return observation_;
}

const std::vector<double>& Environment::reset_with_goals(std::vector<Point> waypoints, Rng& rng) {
  if (waypoints.empty()) fail(ErrorKind::invalid_argument, "reset_with_goals: empty waypoint list");
  begin_episode(std::move(waypoints), rng);
  return observation_;
}

void Environment::begin_episode(std::vector<Point> waypoints, Rng& rng) {
  state_ = sim::zero_state(config_.agent_kind);
  goals_ = GoalQueue{std::move(waypoints), 0};
  clock_ = EpisodeClock{0, config_.dynamics.dt, config_.t_ep, config_.t_inc, config_.t_ep};
  reached_ = 0;
  done_reason_.reset();
  noise_.clear();
  if (config_.info_style == InfoStyle::state_noise) {
    for (int i = 0; i < kNoiseDim; ++i) noise_.push_back(rng.uniform(-1.0, 1.0));
  }
  started_ = true;
  refresh_observation();
}

void Environment::refresh_observation() {
  // Once the queue is exhausted the goal block keeps showing the final waypoint.
  GoalQueue view = goals_;
  if (view.exhausted()) view.current_index = view.waypoints.size() - 1;
  observation_ = build_observation(state_, view, config_.info_style, noise_, config_.scale);
}

StepResult Environment::step(std::span<const double> action) {
  if (!started_) fail(ErrorKind::state, "env_step: reset() has not been called");
  if (done()) fail(ErrorKind::state, "env_step: episode is already done");

  const sim::AgentState prev = state_;
  state_ = sim::step_dynamics(state_, action, config_.dynamics);
  clock_.steps += 1;

  const Point goal = goals_.current();
  const bool hit =
      check_waypoint_hit({state_.body.x, state_.body.y}, goal, config_.boundary_x, config_.boundary_y);

  std::vector<double> clamped(action.begin(), action.end());
  for (double& a : clamped) a = std::clamp(a, -1.0, 1.0);

  StepResult result;
  result.reward = reward(prev, state_, clamped, goal, config_.reward, config_.dynamics.dt, hit);
  result.hit = hit;
  if (hit) {
    goals_.current_index += 1;
    reached_ += 1;
    clock_.deadline += clock_.t_inc;
  }
  if (goals_.exhausted()) {
    done_reason_ = DoneReason::all_waypoints_reached;
  } else if (enforce_deadline_ && clock_.t() > clock_.deadline) {
    done_reason_ = DoneReason::timeout;
  }
  result.done = done();
  result.done_reason = done_reason_;
  refresh_observation();
  result.observation = observation_;
  return result;
}

void Environment::replace_goals(std::vector<Point> waypoints) {
  if (waypoints.empty()) fail(ErrorKind::invalid_argument, "replace_goals: empty waypoint list");
  goals_ = GoalQueue{std::move(waypoints), 0};
  reached_ = 0;
  clock_.deadline = clock_.t() + clock_.t_ep;
  done_reason_.reset();
  refresh_observation();
}

void Environment::restart() {
  state_ = sim::zero_state(config_.agent_kind);
  goals_.current_index = 0;
  clock_.steps = 0;
  clock_.deadline = clock_.t_ep;
  reached_ = 0;
  done_reason_.reset();
  refresh_observation();
}

}  // namespace wayfarer::env
