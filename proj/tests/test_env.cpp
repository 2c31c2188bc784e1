#include <doctest.h>

#include <cmath>
#include <vector>

#include "wayfarer/env.hpp"
#include "wayfarer/error.hpp"

using namespace wayfarer;
using namespace wayfarer::env;

namespace {

EpisodeConfig point_config(InfoStyle info = InfoStyle::state_goal) {
  EpisodeConfig c;
  c.agent_kind = sim::AgentKind::point_mass;
  c.info_style = info;
  return c;
}

// Positions of a point-mass pushed along +x with full throttle, computed with
// the dynamics alone (no environment bookkeeping).
std::vector<double> throttle_track(const sim::DynamicsParams& p, int steps) {
  std::vector<double> xs{0.0};
  sim::AgentState s = sim::zero_state(sim::AgentKind::point_mass);
  const double a[] = {1.0, 0.0};
  for (int k = 0; k < steps; ++k) {
    s = sim::step_dynamics(s, a, p);
    xs.push_back(s.body.x);
  }
  return xs;
}

}  // namespace

TEST_CASE("sample_waypoints stays inside the perimeter") {
  Rng rng(42);
  const TrainingPerimeter tp;
  double sx = 0, sy = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const GoalQueue q = sample_waypoints(tp, 1, rng);
    REQUIRE(q.size() == 1);
    const Point p = q.waypoints[0];
    REQUIRE(p.x >= 7.5);
    REQUIRE(p.x <= 12.5);
    REQUIRE(p.y >= 7.5);
    REQUIRE(p.y <= 12.5);
    sx += p.x;
    sy += p.y;
  }
  CHECK(std::abs(sx / n - 10.0) < 0.02);
  CHECK(std::abs(sy / n - 10.0) < 0.02);
}

TEST_CASE("sample_waypoints determinism and errors") {
  Rng a(7), b(7);
  const GoalQueue qa = sample_waypoints({}, 4, a);
  const GoalQueue qb = sample_waypoints({}, 4, b);
  CHECK(qa.waypoints == qb.waypoints);
  CHECK(qa.current_index == 0);
  CHECK_THROWS_AS(sample_waypoints({}, 0, a), Error);
}

TEST_CASE("single_point_queue") {
  const GoalQueue q = single_point_queue(4);
  REQUIRE(q.size() == 4);
  for (const Point& p : q.waypoints) CHECK(p == Point{10, 10});
  CHECK(single_point_queue(1).size() == 1);
  CHECK_THROWS_AS(single_point_queue(0), Error);

  const auto obs = build_observation(sim::zero_state(sim::AgentKind::point_mass), single_point_queue(1),
                                     InfoStyle::state_goal, {}, {1.0, 1.0});
  const std::vector<double> tail(obs.end() - 4, obs.end());
  CHECK(tail == std::vector<double>{10, 10, 10, 10});
}

TEST_CASE("check_waypoint_hit") {
  CHECK(check_waypoint_hit({10.3, 9.5}, {10, 10}, 1.0, 1.0));
  CHECK_FALSE(check_waypoint_hit({12.0, 10.0}, {10, 10}, 1.0, 1.0));
  CHECK_FALSE(check_waypoint_hit({11.0, 10.0}, {10, 10}, 1.0, 1.0));
  CHECK_FALSE(check_waypoint_hit({10.0, 9.0}, {10, 10}, 1.0, 1.0));
}

TEST_CASE("reward examples") {
  const RewardWeights w;  // w_energy 0.005, no bonus
  sim::AgentState prev = sim::zero_state(sim::AgentKind::ant_proxy);
  sim::AgentState next = prev;
  prev.body.x = 5.0;   // 5.0 from the origin goal
  next.body.x = 4.8;   // 4.8 from it
  const std::vector<double> zero(8, 0.0);
  CHECK(reward(prev, next, zero, {0, 0}, w, 0.05, false) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(reward(prev, prev, zero, {0, 0}, w, 0.05, false) == 0.0);
  const std::vector<double> ones(8, 1.0);
  CHECK(reward(prev, prev, ones, {0, 0}, w, 0.05, false) == doctest::Approx(-0.04).epsilon(1e-12));
  const RewardWeights bonus{0.0, 3.0};
  CHECK(reward(prev, prev, zero, {0, 0}, bonus, 0.05, true) == 3.0);
  CHECK_THROWS_AS(reward(prev, next, zero, {0, 0}, w, 0.0, false), Error);
}

TEST_CASE("build_observation layout") {
  sim::AgentState s = sim::zero_state(sim::AgentKind::ant_proxy);
  for (int i = 0; i < sim::kJointCount; ++i) {
    s.joints.q[i] = 0.1 * i;
    s.joints.qdot[i] = -1.0 * i;
  }
  s.body.x = 3;
  s.body.y = 4;
  s.body.vx = 2;
  s.body.vy = -1;
  s.body.yaw = 0.5;
  GoalQueue q{{{10, 10}, {14, 14}, {8, 8}}, 0};
  const ObservationScale sc;

  const auto full = build_observation(s, q, InfoStyle::state_goal, {}, sc);
  REQUIRE(full.size() == 29);
  for (int i = 0; i < 8; ++i) {
    CHECK(full[i] == s.joints.q[i]);
    CHECK(full[8 + i] == doctest::Approx(s.joints.qdot[i] * 0.3));
  }
  CHECK(full[16] == doctest::Approx(0.3));
  CHECK(full[17] == doctest::Approx(0.4));
  CHECK(full[18] == doctest::Approx(0.075));
  CHECK(full[19] == doctest::Approx(0.6));
  CHECK(full[20] == doctest::Approx(-0.3));
  CHECK(full[21] == 0.0);
  CHECK(full[24] == 0.5);
  CHECK(full[25] == doctest::Approx(1.0));
  CHECK(full[26] == doctest::Approx(1.0));
  CHECK(full[27] == doctest::Approx(1.4));
  CHECK(full[28] == doctest::Approx(1.4));

  CHECK(build_observation(s, q, InfoStyle::state_only, {}, sc).size() == 25);
  const std::vector<double> noise{0.1, -0.2, 0.3, -0.4};
  const auto noisy = build_observation(s, q, InfoStyle::state_noise, noise, sc);
  REQUIRE(noisy.size() == 29);
  CHECK(std::vector<double>(noisy.end() - 4, noisy.end()) == noise);
  CHECK_THROWS_AS(build_observation(s, q, InfoStyle::state_noise, {}, sc), Error);
  CHECK_THROWS_AS(build_observation(s, q, InfoStyle::state_goal, noise, sc), Error);

  // Last waypoint duplicates itself as "next".
  q.current_index = 2;
  const auto last = build_observation(s, q, InfoStyle::state_goal, {}, sc);
  CHECK(last[25] == last[27]);
  CHECK(last[26] == last[28]);

  sim::AgentState bad = s;
  bad.body.x = NAN;
  CHECK_THROWS_AS(build_observation(bad, q, InfoStyle::state_only, {}, sc), Error);
}

TEST_CASE("point-mass observation layout") {
  sim::AgentState s = sim::zero_state(sim::AgentKind::point_mass);
  s.body.x = 5;
  s.body.vy = 1;
  const auto obs = build_observation(s, single_point_queue(2), InfoStyle::state_goal, {}, {});
  REQUIRE(obs.size() == 14);
  CHECK(obs[0] == doctest::Approx(0.5));
  CHECK(obs[3] == doctest::Approx(0.3));
  for (int i = 6; i < 10; ++i) CHECK(obs[i] == 0.0);
  CHECK(observation_dim(sim::AgentKind::point_mass, InfoStyle::state_only) == 10);
  CHECK(observation_dim(sim::AgentKind::ant_proxy, InfoStyle::state_noise) == 29);
}

TEST_CASE("reset follows the training style") {
  EpisodeConfig c = point_config();
  Environment e(c);
  Rng rng(1);
  e.reset(rng);
  REQUIRE(e.goals().size() == 4);
  for (const Point& p : e.goals().waypoints) {
    CHECK(std::abs(p.x - 10) <= 2.5);
    CHECK(std::abs(p.y - 10) <= 2.5);
  }
  CHECK(e.clock().t() == 0.0);
  CHECK(e.clock().deadline == 10.0);

  Rng r1(5), r2(5);
  Environment a(c), b(c);
  CHECK(a.reset(r1) == b.reset(r2));
  CHECK(a.goals().waypoints == b.goals().waypoints);

  c.training_style = TrainingStyle::single_point;
  Environment sp(c);
  sp.reset(rng);
  const std::vector<double> zero{0.0, 0.0};
  for (int k = 0; k < 50 && !sp.done(); ++k) {
    const auto& obs = sp.observation();
    CHECK(std::vector<double>(obs.end() - 4, obs.end()) == std::vector<double>{1.0, 1.0, 1.0, 1.0});
    sp.step(zero);
  }
}

TEST_CASE("noise is drawn once per episode") {
  Environment e(point_config(InfoStyle::state_noise));
  Rng rng(3);
  e.reset(rng);
  const std::vector<double> first(e.observation().end() - 4, e.observation().end());
  for (double v : first) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  const std::vector<double> a{0.3, -0.2};
  for (int k = 0; k < 20; ++k) {
    const auto r = e.step(a);
    CHECK(std::vector<double>(r.observation.end() - 4, r.observation.end()) == first);
  }
  e.reset(rng);
  CHECK(std::vector<double>(e.observation().end() - 4, e.observation().end()) != first);
}

TEST_CASE("timeout after t passes the deadline") {
  Environment e(point_config());
  Rng rng(0);
  e.reset_with_goals({{100, 100}}, rng);
  const std::vector<double> zero{0.0, 0.0};
  int steps = 0;
  StepResult r;
  while (!e.done()) {
    r = e.step(zero);
    ++steps;
    if (!r.done) CHECK(e.clock().t() <= 10.0);
  }
  CHECK(steps == 201);
  CHECK(e.clock().t() > 10.0);
  REQUIRE(r.done_reason.has_value());
  CHECK(*r.done_reason == DoneReason::timeout);
  CHECK(to_string(*r.done_reason) == "timeout");
  CHECK_THROWS_AS(e.step(zero), Error);
}

TEST_CASE("step before reset is rejected") {
  Environment e(point_config());
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(e.step(zero), Error);
}

TEST_CASE("first hit at t=6 extends the deadline to 20") {
  const EpisodeConfig c = point_config();
  const auto xs = throttle_track(c.dynamics, 130);
  // Goal placed so the box test first succeeds on step 120.
  const double gx = 0.5 * (xs[119] + xs[120]) + 1.0;
  REQUIRE(xs[119] <= gx - 1.0);
  REQUIRE(xs[120] > gx - 1.0);

  Environment e(c);
  Rng rng(0);
  e.reset_with_goals({{gx, 0.0}, {-500, -500}, {-500, 500}}, rng);
  const std::vector<double> throttle{1.0, 0.0};
  for (int k = 1; k <= 120; ++k) {
    const auto r = e.step(throttle);
    CHECK(r.hit == (k == 120));
  }
  CHECK(e.clock().t() == doctest::Approx(6.0));
  CHECK(e.waypoints_reached() == 1);
  CHECK(e.goals().current_index == 1);
  CHECK(e.clock().deadline == 20.0);

  const std::vector<double> zero{0.0, 0.0};
  int more = 0;
  while (!e.done()) {
    e.step(zero);
    ++more;
  }
  CHECK(120 + more == 401);
  CHECK(*e.done_reason() == DoneReason::timeout);
}

TEST_CASE("reward uses the pre-hit goal on the hit step") {
  const EpisodeConfig c = point_config();
  const auto xs = throttle_track(c.dynamics, 30);
  const double gx = 0.5 * (xs[19] + xs[20]) + 1.0;
  Environment e(c);
  Rng rng(0);
  e.reset_with_goals({{gx, 0.0}, {-50.0, 0.0}}, rng);
  const std::vector<double> throttle{1.0, 0.0};
  StepResult r;
  for (int k = 0; k < 20; ++k) r = e.step(throttle);
  REQUIRE(r.hit);
  // Moving toward the first goal: positive progress term.
  const double expected = (std::abs(gx - xs[19]) - std::abs(gx - xs[20])) / c.dynamics.dt - c.reward.w_energy * 1.0;
  CHECK(r.reward == doctest::Approx(expected).epsilon(1e-12));
  // Next step is measured against the goal behind the agent.
  const auto r2 = e.step(throttle);
  CHECK(r2.reward < 0);
}

TEST_CASE("fourth hit ends the episode") {
  EpisodeConfig c = point_config();
  Environment e(c);
  Rng rng(0);
  // Goals stacked on the start position: each step hits the next one.
  e.reset_with_goals({{0, 0}, {0, 0}, {0, 0}, {0, 0}}, rng);
  const std::vector<double> zero{0.0, 0.0};
  for (int k = 1; k <= 4; ++k) {
    const auto r = e.step(zero);
    CHECK(r.hit);
    CHECK(e.goals().current_index == static_cast<std::size_t>(k));
    CHECK(e.clock().deadline == 10.0 + 10.0 * k);
    CHECK(r.done == (k == 4));
  }
  CHECK(*e.done_reason() == DoneReason::all_waypoints_reached);
  CHECK(to_string(DoneReason::all_waypoints_reached) == "all-waypoints-reached");
  // Exhausted queue keeps showing the last waypoint.
  const auto& obs = e.observation();
  CHECK(std::vector<double>(obs.end() - 4, obs.end()) == std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("clock law, goal-block consistency and hit monotonicity") {
  EpisodeConfig c = point_config();
  c.scale = {1.0, 1.0};
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Environment e(c);
    Rng rng(seed);
    e.reset(rng);
    Rng act(seed + 1000);
    std::size_t prev_index = 0;
    const double limit = c.t_ep + c.m_waypoints * c.t_inc;
    while (!e.done()) {
      // Steer toward the current goal with some jitter so hits actually happen.
      const Point g = e.goals().current();
      const auto& b = e.state().body;
      std::vector<double> a{0.5 * (g.x - b.x) - 0.9 * b.vx + act.uniform(-0.3, 0.3),
                            0.5 * (g.y - b.y) - 0.9 * b.vy + act.uniform(-0.3, 0.3)};
      e.step(a);
      const std::size_t idx = e.goals().current_index;
      REQUIRE(idx >= prev_index);
      REQUIRE(idx - prev_index <= 1);
      prev_index = idx;
      REQUIRE(e.clock().deadline - c.t_ep == doctest::Approx(c.t_inc * e.waypoints_reached()));
      REQUIRE(e.clock().t() <= limit + c.dynamics.dt);
      if (!e.goals().exhausted()) {
        const auto& obs = e.observation();
        const Point cur = e.goals().current();
        const Point nxt = e.goals().next();
        REQUIRE(obs[10] == cur.x);
        REQUIRE(obs[11] == cur.y);
        REQUIRE(obs[12] == nxt.x);
        REQUIRE(obs[13] == nxt.y);
        if (idx + 1 < e.goals().size()) REQUIRE(nxt == e.goals().waypoints[idx + 1]);
        else REQUIRE(nxt == cur);
      }
    }
  }
}

TEST_CASE("reward telescopes to net progress") {
  EpisodeConfig c = point_config();
  c.reward = {0.0, 0.0};
  Environment e(c);
  Rng rng(2);
  const Point goal{-200, 300};  // unreachable: the goal never changes
  e.reset_with_goals({goal}, rng);
  Rng act(9);
  const double d0 = std::hypot(goal.x, goal.y);
  double sum = 0;
  for (int k = 0; k < 150; ++k) {
    const std::vector<double> a{act.uniform(-1, 1), act.uniform(-1, 1)};
    sum += e.step(a).reward * c.dynamics.dt;
  }
  const auto& b = e.state().body;
  CHECK(std::abs(sum - (d0 - std::hypot(goal.x - b.x, goal.y - b.y))) < 1e-9);
}

TEST_CASE("replace_goals and restart") {
  Environment e(point_config());
  e.set_enforce_deadline(false);
  Rng rng(0);
  e.reset_with_goals({{50, 50}}, rng);
  const std::vector<double> a{1.0, 0.0};
  for (int k = 0; k < 300; ++k) e.step(a);
  CHECK_FALSE(e.done());
  CHECK(e.clock().t() == doctest::Approx(15.0));
  e.replace_goals({{1, 1}, {2, 2}});
  CHECK(e.goals().current_index == 0);
  CHECK(e.clock().deadline == doctest::Approx(25.0));
  CHECK_THROWS_AS(e.replace_goals({}), Error);
  e.restart();
  CHECK(e.state() == sim::zero_state(sim::AgentKind::point_mass));
  CHECK(e.clock().steps == 0);
  CHECK(e.goals().waypoints.size() == 2);
}

TEST_CASE("episode config validation") {
  EpisodeConfig c;
  CHECK_NOTHROW(validate(c));
  c.m_waypoints = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c = {};
  c.boundary_x = -1;
  CHECK_THROWS_AS(validate(c), Error);
}
