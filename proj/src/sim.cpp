#include "wayfarer/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "wayfarer/error.hpp"

namespace wayfarer::sim {

std::string_view to_string(AgentKind kind) {
  return kind == AgentKind::ant_proxy ? "ant-proxy" : "point-mass";
}

AgentKind agent_kind_from_string(std::string_view name) {
  if (name == "ant-proxy") return AgentKind::ant_proxy;
  if (name == "point-mass") return AgentKind::point_mass;
  fail(ErrorKind::config, "unknown agent kind '" + std::string(name) + "' (expected ant-proxy or point-mass)");
}

void validate(const DynamicsParams& p) {
  const std::pair<const char*, double> fields[] = {
      {"dt", p.dt},         {"tau_max", p.tau_max}, {"k_d", p.k_d},         {"c_f", p.c_f},
      {"c_t", p.c_t},       {"mass", p.mass},       {"inertia", p.inertia}, {"k_drag", p.k_drag},
      {"k_rot", p.k_rot},   {"a_max", p.a_max},     {"sigma_stance", p.sigma_stance},
  };
  for (const auto& [name, value] : fields) {
    if (!std::isfinite(value) || value <= 0) {
      fail(ErrorKind::config, std::string("dynamics.") + name + " must be finite and strictly positive");
    }
  }
  if (p.dt > 0.1) fail(ErrorKind::config, "dynamics.dt must lie in (0, 0.1]");
}

double wrap_angle(double angle) {
  constexpr double pi = std::numbers::pi;
  double wrapped = std::remainder(angle, 2.0 * pi);  // [-pi, pi]
  if (wrapped <= -pi) wrapped += 2.0 * pi;
  return wrapped;
}

AgentState zero_state(AgentKind kind) {
  AgentState s;
  s.kind = kind;
  return s;
}

StrokeForces stroke_forces(const JointState& joints, const DynamicsParams& params) {
  std::array<double, 4> thrust{};
  for (int leg = 0; leg < 4; ++leg) {
    const double hip_rate = joints.qdot[2 * leg];
    const double knee = joints.q[2 * leg + 1];
    const double stance = 1.0 / (1.0 + std::exp(knee / params.sigma_stance));
    thrust[leg] = params.c_f * std::max(0.0, -hip_rate) * stance;
  }
  // Grouped by side so that mirroring the legs is exact in floating point.
  const double left = thrust[0] + thrust[1];
  const double right = thrust[2] + thrust[3];
  StrokeForces f;
  f.forward_force = left + right;
  f.yaw_torque = params.c_t * (right - left);
  return f;
}

namespace {

void require_finite(const AgentState& s, std::span<const double> action) {
  const auto& b = s.body;
  const double body[] = {b.x, b.y, b.z, b.vx, b.vy, b.vz, b.roll, b.pitch, b.yaw, b.yaw_rate};
  bool ok = std::all_of(std::begin(body), std::end(body), [](double v) { return std::isfinite(v); });
  for (int i = 0; i < kJointCount; ++i) ok = ok && std::isfinite(s.joints.q[i]) && std::isfinite(s.joints.qdot[i]);
  if (!ok) fail(ErrorKind::invalid_argument, "step_dynamics: non-finite state component");
  for (double a : action) {
    if (!std::isfinite(a)) fail(ErrorKind::invalid_argument, "step_dynamics: non-finite action component");
  }
}

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

AgentState step_dynamics(const AgentState& state, std::span<const double> action, const DynamicsParams& params) {
  if (static_cast<int>(action.size()) != action_dim(state.kind)) {
    fail(ErrorKind::invalid_argument, "step_dynamics: action dimension " + std::to_string(action.size()) +
                                          " does not match agent kind " + std::string(to_string(state.kind)));
  }
  require_finite(state, action);

  const double dt = params.dt;
  AgentState next = state;
  BodyState& b = next.body;

  if (state.kind == AgentKind::point_mass) {
    const double ax = params.a_max * clamp_unit(action[0]) - params.k_drag * b.vx;
    const double ay = params.a_max * clamp_unit(action[1]) - params.k_drag * b.vy;
    b.vx += ax * dt;
    b.vy += ay * dt;
    b.x += b.vx * dt;
    b.y += b.vy * dt;
    return next;
  }

  JointState& j = next.joints;
  for (int i = 0; i < kJointCount; ++i) {
    const double qddot = params.tau_max * clamp_unit(action[i]) - params.k_d * j.qdot[i];
    j.qdot[i] += qddot * dt;
    j.q[i] += j.qdot[i] * dt;
    if (j.q[i] > 1.0 || j.q[i] < -1.0) {
      j.q[i] = clamp_unit(j.q[i]);
      j.qdot[i] = 0.0;
    }
  }

  const StrokeForces f = stroke_forces(j, params);
  const double ax = (f.forward_force * std::cos(b.yaw) - params.k_drag * b.vx) / params.mass;
  const double ay = (f.forward_force * std::sin(b.yaw) - params.k_drag * b.vy) / params.mass;
  const double yaw_acc = (f.yaw_torque - params.k_rot * b.yaw_rate) / params.inertia;
  b.vx += ax * dt;
  b.vy += ay * dt;
  b.yaw_rate += yaw_acc * dt;
  b.x += b.vx * dt;
  b.y += b.vy * dt;
  b.yaw = wrap_angle(b.yaw + b.yaw_rate * dt);
  return next;
}

}  // namespace wayfarer::sim
