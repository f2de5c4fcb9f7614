#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "binpick/pipeline.hpp"

namespace binpick {

/// One experiment: n_bins scenes of objects_per_bin objects, each cleared
/// `trials` times. The base seed fully determines every RNG stream.
struct ScenarioSpec {
  std::string name;
  int n_robots = 2;  // 2 or 4
  Placement placement = Placement::centred;
  int n_bins = 10;
  int objects_per_bin = 10;
  int trials = 10;
  PolicyKind policy;
  PlannerConfig planner;
  PlanningMode planning_mode = PlanningMode::composite;
  SuccessModel success_model = SuccessModel::deterministic;
  std::uint64_t base_seed = 1;
  int max_rounds = 0;         // 0 = derive from objects_per_bin
  int p1_retry_limit = 3;
  int grasps_per_object = 5;

  void validate() const;  // throws std::invalid_argument on a bad spec
};

/// One row per grasp round of every episode.
struct ReportRow {
  std::string scenario;
  int trial = 0;
  int bin = 0;
  int round = 0;
  int robots_used = 0;
  int picks = 0;
  int picks_cumulative = 0;
  int success = 0;  // 1 iff every non-idle robot was rewarded
  double task_ms = 0.0;
  double motion_ms = 0.0;
};

/// One row per (planner, problem) of the motion-planner benchmark.
struct PlannerRow {
  std::string planner;
  int scenario = 0;
  int solved = 0;
  double solve_ms = -1.0;   // wall time to the first solution
  double total_ms = 0.0;
  double cost = -1.0;
  int path_valid = -1;      // independent validate_path verdict
};

struct ScenarioSummary {
  std::string scenario;
  int episodes = 0;
  long total_rounds = 0;
  long total_picks = 0;
  int cleared_episodes = 0;
  int aborted_episodes = 0;
  std::map<int, long> robots_used_histogram;
  std::vector<double> mean_cumulative_picks;  // per round index, over trials
  std::vector<double> ci95_halfwidth;         // t-distribution over per-trial means
  double median_task_ms = 0.0;
  double median_motion_ms = 0.0;

  double robots_used_pct(int n) const;  // share of non-aborted rounds using n robots
};

struct SuiteResult {
  std::vector<ReportRow> rows;
  std::vector<ScenarioSummary> summaries;
};

/// Run every episode of every spec (trials distributed over a bounded worker
/// pool) and aggregate per-scenario statistics.
SuiteResult run_scenario_suite(const std::vector<ScenarioSpec>& specs, int jobs = 1);

struct PlannerBenchResult {
  std::vector<PlannerRow> rows;
  std::map<std::string, double> median_solve_ms;
  std::map<std::string, double> success_rate;
};

/// Seeded random dual-arm problems (kinematic-feasibility assignments over
/// random clutter), each planner timed on the identical problem set.
PlannerBenchResult benchmark_planners(int n_scenarios,
                                      const std::vector<PlannerConfig>& planners,
                                      std::uint64_t seed, int jobs = 1,
                                      bool validate_paths = true);

enum class ReportFormat { csv, json };

/// Bit-stable column order, floats at 6 significant digits.
void emit_report(const std::vector<ReportRow>& rows, ReportFormat format,
                 const std::string& path);
void emit_report(const std::vector<PlannerRow>& rows, ReportFormat format,
                 const std::string& path);
void write_report(const std::vector<ReportRow>& rows, ReportFormat format, std::ostream& out);
void write_report(const std::vector<PlannerRow>& rows, ReportFormat format, std::ostream& out);

std::vector<ReportRow> parse_report(const std::string& path);

/// Canonical experiment suites at desk scale. `quick` shrinks every suite to
/// 3 bins x 3 trials for CI.
std::vector<ScenarioSpec> centred_suite(std::uint64_t seed, bool quick = false);
std::vector<ScenarioSpec> excentred_suite(std::uint64_t seed, bool quick = false);
std::vector<ScenarioSpec> policy_variant_suite(std::uint64_t seed, bool quick = false);
std::vector<ScenarioSpec> four_arm_suite(std::uint64_t seed, bool quick = false);

/// Mean with two-sided 95% t-interval half-width; {mean, 0} for n < 2.
std::pair<double, double> mean_ci95(const std::vector<double>& values);

double median(std::vector<double> values);

}  // namespace binpick
