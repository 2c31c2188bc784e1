#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "wayfarer/error.hpp"
#include "wayfarer/eval.hpp"

using namespace wayfarer;
using namespace wayfarer::eval;

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST_CASE("builtin suite") {
  const auto suite = builtin_suite();
  REQUIRE(suite.size() == 10);
  CHECK(suite[0].waypoints == std::vector<env::Point>{{10, 10}});
  CHECK(suite[6].waypoints == std::vector<env::Point>{{6, 6}});
  CHECK(suite[8].waypoints == std::vector<env::Point>{{7, 12}, {14, 14}});
  int singles = 0;
  for (const auto& c : suite) {
    CHECK(c.trials == 10);
    singles += c.waypoints.size() == 1;
  }
  CHECK(singles == 7);
  CHECK(builtin_suite(3)[0].trials == 3);
}

TEST_CASE("parse_waypoints") {
  const TestCase c = parse_waypoints("7,12; 14,14", 4);
  CHECK(c.waypoints == std::vector<env::Point>{{7, 12}, {14, 14}});
  CHECK(c.trials == 4);
  CHECK(parse_waypoints("-1.5,2e1").waypoints == std::vector<env::Point>{{-1.5, 20}});
  CHECK_THROWS_AS(parse_waypoints(""), Error);
  CHECK_THROWS_AS(parse_waypoints("1,2,3"), Error);
  CHECK_THROWS_AS(parse_waypoints("1;2"), Error);
  CHECK_THROWS_AS(parse_waypoints("a,b"), Error);
  CHECK_THROWS_AS(parse_waypoints("nan,1"), Error);
}

TEST_CASE("goal-seeking controller succeeds on the whole suite") {
  const train::Checkpoint ck = testing::goal_seeking_checkpoint();
  for (const TestCase& tc : builtin_suite(3)) {
    const SuccessReport r = success_ratio(ck, tc, {1, true});
    CHECK(r.success_ratio == 1.0);
    CHECK(r.successes == 3);
    for (const TrialResult& t : r.trials) {
      CHECK(t.success);
      CHECK(t.waypoints_reached == tc.waypoints.size());
      REQUIRE(t.time_to_each.size() == tc.waypoints.size());
      CHECK(t.time_to_each[0] <= 10.0);
      const auto& last = t.trajectory.back();
      const env::Point g = tc.waypoints.back();
      CHECK(std::abs(last.x - g.x) < 1.0);
      CHECK(std::abs(last.y - g.y) < 1.0);
    }
  }
}

TEST_CASE("untrained checkpoint reaches nothing") {
  train::TrainConfig c = testing::tiny_config();
  const train::Checkpoint ck = train::initial_checkpoint(c);
  const TestCase tc{"far", {{10, 10}, {14, 14}}, 5};
  const SuccessReport r = success_ratio(ck, tc, {2, false});
  CHECK(r.success_ratio == 0.0);
  CHECK(r.successes == 0);
  const double max_samples = (10.0 + 2 * 10.0) / c.episode.dynamics.dt + 1;
  for (const TrialResult& t : r.trials) {
    CHECK(t.waypoints_reached == 0);
    CHECK_FALSE(t.success);
    CHECK(static_cast<double>(t.trajectory.size()) <= max_samples);
    CHECK(t.trajectory.front().t == 0.0);
  }
}

TEST_CASE("trial seeds are isolated") {
  train::TrainConfig c = testing::tiny_config();
  const train::Checkpoint ck = train::initial_checkpoint(c);
  const TestCase five{"a", {{10, 10}}, 5};
  const TestCase two{"a", {{10, 10}}, 2};
  const SuccessReport r5 = success_ratio(ck, five, {9, false});
  const SuccessReport r2 = success_ratio(ck, two, {9, false});
  for (int i = 0; i < 2; ++i) {
    REQUIRE(r5.trials[i].trajectory.size() == r2.trials[i].trajectory.size());
    CHECK(r5.trials[i].trajectory.back().x == r2.trials[i].trajectory.back().x);
  }
  CHECK(r5.trials[0].trajectory.back().x != r5.trials[1].trajectory.back().x);
  CHECK_THROWS_AS(success_ratio(ck, TestCase{"z", {{1, 1}}, 0}, {}), Error);
}

TEST_CASE("run_trial rejects an inconsistent checkpoint") {
  train::Checkpoint ck = testing::goal_seeking_checkpoint();
  ck.head.log_std.assign(3, 0.0);
  Rng rng(0);
  CHECK_THROWS_AS(run_trial(ck, builtin_suite()[0], rng, true), Error);
}

TEST_CASE("trajectory and report files") {
  const train::Checkpoint ck = testing::goal_seeking_checkpoint();
  const auto suite = builtin_suite(2);
  std::vector<SuccessReport> reports;
  for (const auto& tc : suite) reports.push_back(success_ratio(ck, tc, {0, true}));

  testing::TempDir dir;
  const auto traj = dir.path() / "t.csv";
  export_trajectory(reports[0].trials[0], traj);
  const auto lines = read_lines(traj);
  REQUIRE(lines.size() == reports[0].trials[0].trajectory.size() + 1);
  CHECK(lines[0] == kTrajectoryHeader);
  CHECK(std::stod(lines[1].substr(0, lines[1].find(','))) == 0.0);

  const auto csv = dir.path() / "reports.csv";
  write_reports_csv(reports, csv);
  const auto rows = read_lines(csv);
  REQUIRE(rows.size() == 11);
  CHECK(rows[0] == kReportHeader);
  CHECK(rows[1].rfind("single_0,2,2,", 0) == 0);

  const std::string table = format_report_table(reports);
  CHECK(table.find("two_point_2") != std::string::npos);

  CHECK_THROWS_AS(export_trajectory(reports[0].trials[0], dir.path() / "missing" / "x.csv"), Error);
}
