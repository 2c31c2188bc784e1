#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wayfarer/env.hpp"
#include "wayfarer/trainer.hpp"

namespace wayfarer::eval {

struct TestCase {
  std::string name;
  std::vector<env::Point> waypoints;
  int trials = 10;
};

struct TrajectorySample {
  double t = 0;
  double x = 0;
  double y = 0;
  double yaw = 0;
  env::Point current_goal;
  std::size_t waypoints_reached = 0;
};

struct TrialResult {
  bool success = false;
  std::size_t waypoints_reached = 0;
  std::vector<double> time_to_each;  // elapsed time at each reached waypoint
  std::vector<TrajectorySample> trajectory;  // one sample per step, starting at t = 0
};

struct SuccessReport {
  TestCase test_case;
  std::vector<TrialResult> trials;
  std::size_t successes = 0;
  double success_ratio = 0;
};

struct EvalOptions {
  std::uint64_t seed = 0;
  bool deterministic = false;  // policy mean instead of sampled actions
};

// Single-point goals (10,10) (14,14) (12,8) (8,12) (13,7) (7,13) (6,6), then
// the two-point paths (7,7)->(14,14), (7,12)->(14,14), (12,7)->(14,14).
std::vector<TestCase> builtin_suite(int trials = 10);

// Test cases given as "x1,y1;x2,y2;...".
TestCase parse_waypoints(std::string_view text, int trials = 10);

TrialResult run_trial(const train::Checkpoint& checkpoint, const TestCase& test_case, Rng& rng, bool deterministic);

// Trial i runs on the stream derived from (options.seed, i) alone.
SuccessReport success_ratio(const train::Checkpoint& checkpoint, const TestCase& test_case, const EvalOptions& options);

void export_trajectory(const TrialResult& result, const std::filesystem::path& destination);

inline constexpr std::string_view kTrajectoryHeader = "t,x,y,yaw,current_goal_x,current_goal_y,waypoints_reached";
inline constexpr std::string_view kReportHeader = "case,trials,successes,ratio";

void write_reports_csv(std::span<const SuccessReport> reports, const std::filesystem::path& destination);
std::string format_report_table(std::span<const SuccessReport> reports);

}  // namespace wayfarer::eval
