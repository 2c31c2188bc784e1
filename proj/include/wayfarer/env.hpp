#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wayfarer/rng.hpp"
#include "wayfarer/sim.hpp"

namespace wayfarer::env {

struct Point {
  double x = 0;
  double y = 0;
  bool operator==(const Point&) const = default;
};

struct TrainingPerimeter {
  Point center{10.0, 10.0};
  double half_extent = 2.5;
  bool operator==(const TrainingPerimeter&) const = default;
};

struct GoalQueue {
  std::vector<Point> waypoints;
  std::size_t current_index = 0;

  std::size_t size() const { return waypoints.size(); }
  bool exhausted() const { return current_index >= waypoints.size(); }
  const Point& current() const;
  // Next waypoint after the current one; duplicates the current one at the end of the list.
  const Point& next() const;
};

enum class TrainingStyle { single_point, random_waypoints };
enum class InfoStyle { state_only, state_noise, state_goal };

std::string_view to_string(TrainingStyle style);
std::string_view to_string(InfoStyle style);

struct RewardWeights {
  double w_energy = 0.005;
  double hit_bonus = 0.0;
  bool operator==(const RewardWeights&) const = default;
};

struct ObservationScale {
  double pos = 0.1;
  double vel = 0.3;
  bool operator==(const ObservationScale&) const = default;
};

struct EpisodeConfig {
  TrainingStyle training_style = TrainingStyle::random_waypoints;
  InfoStyle info_style = InfoStyle::state_goal;
  sim::AgentKind agent_kind = sim::AgentKind::point_mass;
  int m_waypoints = 4;
  double boundary_x = 1.0;
  double boundary_y = 1.0;
  double t_ep = 10.0;
  double t_inc = 10.0;
  TrainingPerimeter perimeter;
  RewardWeights reward;
  ObservationScale scale;
  sim::DynamicsParams dynamics;

  bool operator==(const EpisodeConfig&) const = default;
};

void validate(const EpisodeConfig& config);

inline constexpr int kNoiseDim = 4;

int proprio_dim(sim::AgentKind kind);
int observation_dim(sim::AgentKind kind, InfoStyle style);

GoalQueue sample_waypoints(const TrainingPerimeter& perimeter, int m, Rng& rng);
GoalQueue single_point_queue(int m);

bool check_waypoint_hit(Point pos, Point goal, double bx, double by);

double reward(const sim::AgentState& prev, const sim::AgentState& next, std::span<const double> action, Point goal,
              const RewardWeights& weights, double dt, bool hit);

std::vector<double> build_observation(const sim::AgentState& state, const GoalQueue& goals, InfoStyle style,
                                      std::span<const double> noise, const ObservationScale& scale = {});

enum class DoneReason { timeout, all_waypoints_reached };
std::string_view to_string(DoneReason reason);

struct StepResult {
  std::vector<double> observation;
  double reward = 0;
  bool hit = false;
  bool done = false;
  std::optional<DoneReason> done_reason;
};

// Clock of one episode. Time is kept as a step count so that deadline
// comparisons do not drift with floating-point accumulation.
struct EpisodeClock {
  long steps = 0;
  double dt = 0.05;
  double t_ep = 10.0;
  double t_inc = 10.0;
  double deadline = 10.0;

  double t() const { return static_cast<double>(steps) * dt; }
};

// One episode of goal-conditioned locomotion. Single-threaded; instances are
// independent of each other.
class Environment {
 public:
  explicit Environment(EpisodeConfig config);

  // Fresh agent, waypoints according to the training style, noise drawn once.
  const std::vector<double>& reset(Rng& rng);
  // Same, but with an explicit waypoint sequence (evaluation, teleoperation).
  const std::vector<double>& reset_with_goals(std::vector<Point> waypoints, Rng& rng);

  StepResult step(std::span<const double> action);

  // Replace the goal queue between steps. The deadline is re-based to t + t_ep.
  void replace_goals(std::vector<Point> waypoints);
  // Re-zero the agent and the clock, restarting the current goal list.
  void restart();

  // Disable timeout termination (operator-driven sessions).
  void set_enforce_deadline(bool enforce) { enforce_deadline_ = enforce; }

  const EpisodeConfig& config() const { return config_; }
  const sim::AgentState& state() const { return state_; }
  const GoalQueue& goals() const { return goals_; }
  const EpisodeClock& clock() const { return clock_; }
  std::size_t waypoints_reached() const { return reached_; }
  const std::vector<double>& observation() const { return observation_; }
  bool done() const { return done_reason_.has_value(); }
  std::optional<DoneReason> done_reason() const { return done_reason_; }
  int observation_size() const;
  int action_size() const { return sim::action_dim(config_.agent_kind); }

 private:
  void begin_episode(std::vector<Point> waypoints, Rng& rng);
  void refresh_observation();

  EpisodeConfig config_;
  sim::AgentState state_;
  GoalQueue goals_;
  EpisodeClock clock_;
  std::size_t reached_ = 0;
  std::vector<double> noise_;
  std::vector<double> observation_;
  std::optional<DoneReason> done_reason_;
  bool enforce_deadline_ = true;
  bool started_ = false;
};

}  // namespace wayfarer::env
