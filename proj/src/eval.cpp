#include "wayfarer/eval.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wayfarer/error.hpp"

namespace wayfarer::eval {

std::vector<TestCase> builtin_suite(int trials) {
  std::vector<TestCase> suite;
  const env::Point singles[] = {{10, 10}, {14, 14}, {12, 8}, {8, 12}, {13, 7}, {7, 13}, {6, 6}};
  for (std::size_t i = 0; i < std::size(singles); ++i) {
    suite.push_back({"single_" + std::to_string(i), {singles[i]}, trials});
  }
  suite.push_back({"two_point_1", {{7, 7}, {14, 14}}, trials});
  suite.push_back({"two_point_2", {{7, 12}, {14, 14}}, trials});
  suite.push_back({"two_point_3", {{12, 7}, {14, 14}}, trials});
  return suite;
}

namespace {

double parse_number(std::string_view text, std::string_view whole) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    fail(ErrorKind::invalid_argument, "malformed waypoint list '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

TestCase parse_waypoints(std::string_view text, int trials) {
  TestCase tc{"custom", {}, trials};
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto semi = text.find(';', start);
    const std::string_view item = text.substr(start, semi == std::string_view::npos ? std::string_view::npos : semi - start);
    const auto comma = item.find(',');
    if (comma == std::string_view::npos) fail(ErrorKind::invalid_argument, "malformed waypoint list '" + std::string(text) + "'");
    tc.waypoints.push_back({parse_number(item.substr(0, comma), text), parse_number(item.substr(comma + 1), text)});
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  return tc;
}

TrialResult run_trial(const train::Checkpoint& checkpoint, const TestCase& test_case, Rng& rng, bool deterministic) {
  if (test_case.waypoints.empty()) fail(ErrorKind::invalid_argument, "test case '" + test_case.name + "' has no waypoints");
  env::Environment environment(checkpoint.config.episode);
  if (environment.observation_size() != checkpoint.policy.dims().input ||
      environment.action_size() != checkpoint.policy.dims().output ||
      checkpoint.head.log_std.size() != static_cast<std::size_t>(environment.action_size())) {
    fail(ErrorKind::config, "checkpoint networks do not match its episode configuration");
  }

  TrialResult result;
  auto sample = [&] {
    const auto& body = environment.state().body;
    const auto& goals = environment.goals();
    const env::Point goal = goals.exhausted() ? goals.waypoints.back() : goals.current();
    result.trajectory.push_back({environment.clock().t(), body.x, body.y, body.yaw, goal, environment.waypoints_reached()});
  };

  std::vector<double> observation = environment.reset_with_goals(test_case.waypoints, rng);
  sample();
  while (!environment.done()) {
    std::vector<double> action = train::policy_mean(checkpoint, observation);
    if (!deterministic) action = nn::sample_action(action, checkpoint.head, rng).action;
    env::StepResult step = environment.step(action);
    if (step.hit) result.time_to_each.push_back(environment.clock().t());
    observation = std::move(step.observation);
    sample();
  }
  result.waypoints_reached = environment.waypoints_reached();
  result.success = result.waypoints_reached == test_case.waypoints.size();
  return result;
}

SuccessReport success_ratio(const train::Checkpoint& checkpoint, const TestCase& test_case, const EvalOptions& options) {
  if (test_case.trials < 1) fail(ErrorKind::invalid_argument, "test case '" + test_case.name + "': trials must be >= 1");
  SuccessReport report;
  report.test_case = test_case;
  for (int i = 0; i < test_case.trials; ++i) {
    Rng rng = Rng::derive(options.seed, {0x6576616cULL, static_cast<std::uint64_t>(i)});
    report.trials.push_back(run_trial(checkpoint, test_case, rng, options.deterministic));
    if (report.trials.back().success) ++report.successes;
  }
  report.success_ratio = static_cast<double>(report.successes) / static_cast<double>(test_case.trials);
  return report;
}

void export_trajectory(const TrialResult& result, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write trajectory to " + destination.string());
  out << kTrajectoryHeader << '\n';
  char line[256];
  for (const auto& s : result.trajectory) {
    std::snprintf(line, sizeof(line), "%.6f,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", s.t, s.x, s.y, s.yaw, s.current_goal.x,
                  s.current_goal.y, s.waypoints_reached);
    out << line;
  }
  out.flush();
  if (!out) fail(ErrorKind::io, "write failed for " + destination.string());
}

void write_reports_csv(std::span<const SuccessReport> reports, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write reports to " + destination.string());
  out << kReportHeader << '\n';
  for (const auto& r : reports) {
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%d,%zu,%.4f\n", r.test_case.name.c_str(), r.test_case.trials, r.successes,
                  r.success_ratio);
    out << line;
  }
  out.flush();
  if (!out) fail(ErrorKind::io, "write failed for " + destination.string());
}

std::string format_report_table(std::span<const SuccessReport> reports) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-14s %-26s %7s %9s %7s\n", "case", "waypoints", "trials", "successes", "ratio");
  os << line;
  for (const auto& r : reports) {
    std::string path;
    for (const auto& p : r.test_case.waypoints) {
      char pt[64];
      std::snprintf(pt, sizeof(pt), "%s(%g,%g)", path.empty() ? "" : "->", p.x, p.y);
      path += pt;
    }
    std::snprintf(line, sizeof(line), "%-14s %-26s %7d %9zu %6.0f%%\n", r.test_case.name.c_str(), path.c_str(),
                  r.test_case.trials, r.successes, 100.0 * r.success_ratio);
    os << line;
  }
  return os.str();
}

}  // namespace wayfarer::eval
