#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wayfarer/env.hpp"
#include "wayfarer/trainer.hpp"

namespace wayfarer::teleop {

enum class CommandType { set_waypoints, reset, pause, resume };

struct Command {
  CommandType type = CommandType::reset;
  std::vector<env::Point> waypoints;  // set_waypoints only
};

// Parses one JSON message. Throws Error(invalid_argument) with a message
// suitable for an error reply.
Command parse_command(std::string_view line);

struct Telemetry {
  long tick = 0;
  double t = 0;
  double x = 0, y = 0, yaw = 0;
  std::optional<std::array<double, sim::kJointCount>> joint_angles;  // ant-proxy only
  std::vector<env::Point> goals;
  std::size_t current_index = 0;
  std::size_t waypoints_reached = 0;
  bool done = false;
  bool paused = false;
};

// Newline-terminated JSON line of type "state".
std::string to_json_line(const Telemetry& message);
std::string error_line(std::string_view message);

struct SessionOptions {
  double delay_s = 0.0;
  int telemetry_every = 2;
  bool strict_clock = false;
  std::uint64_t seed = 0;
};

// Simulation side of a live session. Time is counted in link ticks of one
// control step each; the link clock keeps running while the agent is paused,
// the episode clock does not. A command submitted at link tick k takes effect
// at the first tick >= k + ceil(delay / dt). Commands that become due while
// paused (other than resume) are held and applied at resume, in order.
class TeleopSession {
 public:
  TeleopSession(const train::Checkpoint& checkpoint, SessionOptions options);

  void submit(Command command);

  // Advances one link tick; returns telemetry when this tick is on the cadence.
  std::optional<Telemetry> tick();

  Telemetry snapshot() const;
  long link_ticks() const { return link_ticks_; }
  double link_time() const;
  bool paused() const { return paused_; }
  std::size_t pending_commands() const { return in_flight_.size() + held_.size(); }
  const env::Environment& environment() const { return environment_; }

 private:
  struct InFlight {
    long due_tick;
    Command command;
  };

  void apply(const Command& command);

  const train::Checkpoint& checkpoint_;
  SessionOptions options_;
  env::Environment environment_;
  Rng rng_;
  long delay_ticks_ = 0;
  long link_ticks_ = 0;
  long telemetry_ticks_ = 0;
  long next_message_ = 0;
  bool paused_ = false;
  std::deque<InFlight> in_flight_;
  std::vector<Command> held_;
};

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  int command_delay_ms = 0;
  int telemetry_every = 2;
  bool strict_clock = false;
  std::optional<std::filesystem::path> console_dir;  // served at "/"
  double time_scale = 1.0;  // simulated seconds per wall-clock second
  std::uint64_t seed = 0;
};

// Serves a checkpoint: HTTP static files at "/" and the newline-delimited JSON
// protocol on the WebSocket endpoint "/ws". One simulation thread writes the
// session; network I/O runs on its own thread.
class TeleopServer {
 public:
  TeleopServer(train::Checkpoint checkpoint, ServerOptions options);
  ~TeleopServer();

  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  // Binds and starts serving. Throws Error(io) when the address cannot be bound.
  void start();
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();
  unsigned short port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wayfarer::teleop
