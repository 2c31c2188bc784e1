#pragma once

#include <array>
#include <span>
#include <string_view>

namespace wayfarer::sim {

enum class AgentKind { ant_proxy, point_mass };

inline constexpr int kJointCount = 8;
inline constexpr double kBodyHeight = 0.75;

constexpr int action_dim(AgentKind kind) { return kind == AgentKind::ant_proxy ? kJointCount : 2; }

std::string_view to_string(AgentKind kind);
AgentKind agent_kind_from_string(std::string_view name);

struct BodyState {
  double x = 0, y = 0, z = kBodyHeight;
  double vx = 0, vy = 0, vz = 0;
  double roll = 0, pitch = 0, yaw = 0;
  double yaw_rate = 0;

  bool operator==(const BodyState&) const = default;
};

// Leg i drives hip q[2i] and knee q[2i+1]; legs 0 and 1 are on the left side.
struct JointState {
  std::array<double, kJointCount> q{};
  std::array<double, kJointCount> qdot{};

  bool operator==(const JointState&) const = default;
};

struct AgentState {
  AgentKind kind = AgentKind::point_mass;
  BodyState body;
  JointState joints;  // all zero for point-mass

  bool operator==(const AgentState&) const = default;
};

struct DynamicsParams {
  double dt = 0.05;
  double tau_max = 20.0;
  double k_d = 4.0;
  double c_f = 1.0;
  double c_t = 0.2;
  double mass = 1.0;
  double inertia = 0.2;
  double k_drag = 0.5;
  double k_rot = 0.4;
  double a_max = 2.0;
  double sigma_stance = 0.2;

  bool operator==(const DynamicsParams&) const = default;
};

// Throws Error(config) when a parameter is out of range.
void validate(const DynamicsParams& params);

struct StrokeForces {
  double forward_force = 0;
  double yaw_torque = 0;
};

AgentState zero_state(AgentKind kind);

StrokeForces stroke_forces(const JointState& joints, const DynamicsParams& params);

// One semi-implicit Euler step. Action components are clamped to [-1, 1].
AgentState step_dynamics(const AgentState& state, std::span<const double> action, const DynamicsParams& params);

double wrap_angle(double angle);

}  // namespace wayfarer::sim
