#include "wayfarer/teleop.hpp"

#include <cmath>

#include <json.hpp>

#include "wayfarer/error.hpp"

namespace wayfarer::teleop {

using nlohmann::json;

Command parse_command(std::string_view line) {
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::exception&) {
    fail(ErrorKind::invalid_argument, "message is not valid JSON");
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    fail(ErrorKind::invalid_argument, "message needs a string field 'type'");
  }
  const std::string type = msg["type"].get<std::string>();
  Command cmd;
  if (type == "reset") {
    cmd.type = CommandType::reset;
  } else if (type == "pause") {
    cmd.type = CommandType::pause;
  } else if (type == "resume") {
    cmd.type = CommandType::resume;
  } else if (type == "set_waypoints") {
    cmd.type = CommandType::set_waypoints;
    const auto it = msg.find("waypoints");
    if (it == msg.end() || !it->is_array()) fail(ErrorKind::invalid_argument, "set_waypoints needs a 'waypoints' array");
    for (const auto& p : *it) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        fail(ErrorKind::invalid_argument, "waypoints must be [x, y] number pairs");
      }
      const env::Point pt{p[0].get<double>(), p[1].get<double>()};
      if (!std::isfinite(pt.x) || !std::isfinite(pt.y)) fail(ErrorKind::invalid_argument, "waypoint coordinates must be finite");
      cmd.waypoints.push_back(pt);
    }
    if (cmd.waypoints.empty()) fail(ErrorKind::invalid_argument, "set_waypoints needs at least one waypoint");
  } else {
    fail(ErrorKind::invalid_argument, "unknown message type '" + type + "'");
  }
  return cmd;
}

std::string to_json_line(const Telemetry& m) {
  json goals = json::array();
  for (const auto& g : m.goals) goals.push_back({g.x, g.y});
  json j = {{"type", "state"},
            {"tick", m.tick},
            {"t", m.t},
            {"pose", {{"x", m.x}, {"y", m.y}, {"yaw", m.yaw}}},
            {"goals", std::move(goals)},
            {"current_index", m.current_index},
            {"waypoints_reached", m.waypoints_reached},
            {"done", m.done},
            {"paused", m.paused}};
  if (m.joint_angles) j["joint_angles"] = *m.joint_angles;
  return j.dump() + "\n";
}

std::string error_line(std::string_view message) {
  return json{{"type", "error"}, {"message", std::string(message)}}.dump() + "\n";
}

TeleopSession::TeleopSession(const train::Checkpoint& checkpoint, SessionOptions options)
    : checkpoint_(checkpoint),
      options_(options),
      environment_(checkpoint.config.episode),
      rng_(Rng::derive(options.seed, {0x74656c65ULL})) {
  if (options_.telemetry_every < 1) fail(ErrorKind::config, "telemetry cadence must be >= 1 step");
  if (!std::isfinite(options_.delay_s) || options_.delay_s < 0) fail(ErrorKind::config, "command delay must be >= 0");
  const double dt = checkpoint.config.episode.dynamics.dt;
  delay_ticks_ = static_cast<long>(std::ceil(options_.delay_s / dt - 1e-9));
  environment_.set_enforce_deadline(options_.strict_clock);
  environment_.reset(rng_);
}

double TeleopSession::link_time() const {
  return static_cast<double>(link_ticks_) * checkpoint_.config.episode.dynamics.dt;
}

void TeleopSession::submit(Command command) {
  if (command.type == CommandType::set_waypoints && command.waypoints.empty()) {
    fail(ErrorKind::invalid_argument, "set_waypoints needs at least one waypoint");
  }
  in_flight_.push_back({link_ticks_ + delay_ticks_, std::move(command)});
}

void TeleopSession::apply(const Command& command) {
  switch (command.type) {
    case CommandType::set_waypoints: environment_.replace_goals(command.waypoints); break;
    case CommandType::reset: environment_.restart(); break;
    case CommandType::pause: paused_ = true; break;
    case CommandType::resume:
      paused_ = false;
      for (const auto& held : held_) apply(held);
      held_.clear();
      break;
  }
}

std::optional<Telemetry> TeleopSession::tick() {
  while (!in_flight_.empty() && in_flight_.front().due_tick <= link_ticks_) {
    Command cmd = std::move(in_flight_.front().command);
    in_flight_.pop_front();
    if (paused_ && cmd.type != CommandType::resume && cmd.type != CommandType::pause) {
      held_.push_back(std::move(cmd));
    } else {
      apply(cmd);
    }
  }

  if (!paused_ && !environment_.done()) {
    const auto action = train::policy_mean(checkpoint_, environment_.observation());
    environment_.step(action);
  }
  ++link_ticks_;

  if (++telemetry_ticks_ % options_.telemetry_every != 0) return std::nullopt;
  Telemetry m = snapshot();
  m.tick = next_message_++;
  return m;
}

Telemetry TeleopSession::snapshot() const {
  Telemetry m;
  m.tick = next_message_;
  const auto& s = environment_.state();
  m.t = environment_.clock().t();
  m.x = s.body.x;
  m.y = s.body.y;
  m.yaw = s.body.yaw;
  if (s.kind == sim::AgentKind::ant_proxy) m.joint_angles = s.joints.q;
  m.goals = environment_.goals().waypoints;
  m.current_index = environment_.goals().current_index;
  m.waypoints_reached = environment_.waypoints_reached();
  m.done = environment_.done();
  m.paused = paused_;
  return m;
}

}  // namespace wayfarer::teleop
