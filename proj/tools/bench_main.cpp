// bench: run pick-and-place experiment suites, benchmark the motion planners,
// and convert reports between CSV and JSON.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "binpick/bench.hpp"
#include "binpick/json_io.hpp"

namespace {

using namespace binpick;

ReportFormat format_from(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw CLI::ValidationError("--format", "expected csv or json");
}

std::vector<ScenarioSpec> suite_by_name(const std::string& name, std::uint64_t seed,
                                        bool quick) {
  if (name == "centred") return centred_suite(seed, quick);
  if (name == "excentred") return excentred_suite(seed, quick);
  if (name == "policy_variant") return policy_variant_suite(seed, quick);
  if (name == "four_arm") return four_arm_suite(seed, quick);
  if (name == "all") {
    std::vector<ScenarioSpec> specs;
    for (const auto& part : {centred_suite(seed, quick), excentred_suite(seed, quick),
                             policy_variant_suite(seed, quick), four_arm_suite(seed, quick)})
      specs.insert(specs.end(), part.begin(), part.end());
    return specs;
  }
  throw CLI::ValidationError(
      "--suite", "expected centred, excentred, policy_variant, four_arm, or all");
}

void print_summaries(const std::vector<ScenarioSummary>& summaries) {
  std::printf("%-28s %8s %8s %8s %8s %8s %10s %10s %12s\n", "scenario", "episodes",
              "rounds", "picks", "cleared", "aborted", "task_ms", "motion_ms",
              "final_picks");
  for (const ScenarioSummary& s : summaries) {
    const double final_mean =
        s.mean_cumulative_picks.empty() ? 0.0 : s.mean_cumulative_picks.back();
    const double final_hw = s.ci95_halfwidth.empty() ? 0.0 : s.ci95_halfwidth.back();
    std::printf("%-28s %8d %8ld %8ld %8d %8d %10.1f %10.1f %6.2f ± %.2f\n",
                s.scenario.c_str(), s.episodes, s.total_rounds, s.total_picks,
                s.cleared_episodes, s.aborted_episodes, s.median_task_ms,
                s.median_motion_ms, final_mean, final_hw);
  }
}

int run_command(const std::string& spec_path, const std::string& suite,
                std::uint64_t seed, bool quick, int jobs, const std::string& out,
                const std::string& format, const std::string& summary_out, bool strict) {
  std::vector<ScenarioSpec> specs;
  if (!spec_path.empty()) specs = load_scenario_specs(spec_path);
  if (!suite.empty()) {
    const auto suite_specs = suite_by_name(suite, seed, quick);
    specs.insert(specs.end(), suite_specs.begin(), suite_specs.end());
  }
  if (specs.empty()) {
    std::cerr << "bench run: provide --spec and/or --suite\n";
    return 1;
  }

  const SuiteResult result = run_scenario_suite(specs, jobs);
  print_summaries(result.summaries);
  if (!out.empty()) emit_report(result.rows, format_from(format), out);
  if (!summary_out.empty()) {
    json j = result.summaries;
    std::ofstream f(summary_out);
    if (!f) throw std::runtime_error("cannot open " + summary_out);
    f << j.dump(2) << '\n';
  }

  if (strict)
    for (const ScenarioSummary& s : result.summaries)
      if (s.aborted_episodes > 0) {
        std::cerr << "strict: scenario " << s.scenario << " aborted "
                  << s.aborted_episodes << " episode(s)\n";
        return 2;
      }
  return 0;
}

int planners_command(int count, std::uint64_t seed, double budget_ms, int jobs,
                     const std::string& out, const std::string& format, bool validate) {
  std::vector<PlannerConfig> planners;
  for (PlannerKind kind : {PlannerKind::rrt, PlannerKind::rrt_connect,
                           PlannerKind::rrt_star, PlannerKind::bit_star}) {
    PlannerConfig pc;
    pc.kind = kind;
    pc.time_budget_ms = budget_ms;
    planners.push_back(pc);
  }
  const PlannerBenchResult result =
      benchmark_planners(count, planners, seed, jobs, validate);

  std::printf("%-12s %10s %14s %12s\n", "planner", "success", "median_solve", "validated");
  for (const auto& [name, rate] : result.success_rate) {
    const auto it = result.median_solve_ms.find(name);
    const double med = it == result.median_solve_ms.end() ? -1.0 : it->second;
    long valid = 0, solved = 0;
    for (const PlannerRow& r : result.rows)
      if (r.planner == name && r.solved) {
        ++solved;
        if (r.path_valid == 1) ++valid;
      }
    std::printf("%-12s %9.1f%% %11.2f ms %7ld/%ld\n", name.c_str(), 100.0 * rate, med,
                valid, solved);
  }
  if (!out.empty()) emit_report(result.rows, format_from(format), out);
  return 0;
}

int report_command(const std::string& in, const std::string& out,
                   const std::string& format) {
  const std::vector<ReportRow> rows = parse_report(in);
  if (out.empty())
    write_report(rows, format_from(format), std::cout);
  else
    emit_report(rows, format_from(format), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-arm bin-picking experiment harness"};
  app.require_subcommand(1);

  std::string spec_path, suite, out, format = "csv", summary_out, report_in;
  std::uint64_t seed = 1;
  bool quick = false, strict = false, no_validate = false;
  int jobs = 1, count = 100;
  double budget_ms = 1000.0;

  CLI::App* run = app.add_subcommand("run", "Run experiment scenarios");
  run->add_option("--spec", spec_path, "Scenario spec JSON (object or array)");
  run->add_option("--suite", suite,
                  "Built-in suite: centred, excentred, policy_variant, four_arm, all");
  run->add_option("--seed", seed, "Base seed for built-in suites");
  run->add_flag("--quick", quick, "Shrink suites to 3 bins x 3 trials");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "Write per-round report to this path");
  run->add_option("--format", format, "Report format: csv or json");
  run->add_option("--summary-out", summary_out, "Write scenario summaries as JSON");
  run->add_flag("--strict", strict, "Exit nonzero if any episode aborted");

  CLI::App* planners = app.add_subcommand("planners", "Benchmark the motion planners");
  planners->add_option("--count", count, "Number of problems")->check(CLI::PositiveNumber);
  planners->add_option("--seed", seed, "Problem-generation seed");
  planners->add_option("--budget-ms", budget_ms, "Per-planner time budget")
      ->check(CLI::PositiveNumber);
  planners->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  planners->add_option("--out", out, "Write per-problem report to this path");
  planners->add_option("--format", format, "Report format: csv or json");
  planners->add_flag("--no-validate", no_validate, "Skip independent path validation");

  CLI::App* report = app.add_subcommand("report", "Convert a per-round report");
  report->add_option("--in", report_in, "Input report (csv or json)")->required();
  report->add_option("--out", out, "Output path (default stdout)");
  report->add_option("--format", format, "Output format: csv or json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return run_command(spec_path, suite, seed, quick, jobs, out, format, summary_out,
                         strict);
    if (planners->parsed())
      return planners_command(count, seed, budget_ms, jobs, out, format, !no_validate);
    return report_command(report_in, out, format);
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 1;
  }
}
