#include "binpick/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "binpick/rng.hpp"

namespace binpick {

namespace {

// Runs tasks 0..n-1 on a bounded pool; each task writes only its own slot,
// so aggregation order never depends on scheduling.
void run_indexed(int n, int jobs, const std::function<void(int)>& task) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) task(i);
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min(jobs, n);
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
}

int derived_max_rounds(const ScenarioSpec& spec) {
  return spec.max_rounds > 0 ? spec.max_rounds : 3 * spec.objects_per_bin;
}

struct EpisodeResult {
  std::vector<ReportRow> rows;
  EpisodeLog log;
};

EpisodeResult run_one_episode(const ScenarioSpec& spec, const Workcell& cell, int bin,
                              int trial) {
  const BinScene scene = generate_scene(spec.placement, spec.objects_per_bin,
                                        mix_seed(spec.base_seed, 0xb19, bin));
  PipelineConfig cfg;
  cfg.policy = spec.policy;
  cfg.planner = spec.planner;
  cfg.planning_mode = spec.planning_mode;
  cfg.max_rounds = derived_max_rounds(spec);
  cfg.p1_retry_limit = spec.p1_retry_limit;
  cfg.success_model = spec.success_model;
  cfg.grasps_per_object = spec.grasps_per_object;
  cfg.rng_seed = mix_seed(spec.base_seed, 0xe9, bin, trial);

  EpisodeResult result;
  result.log = run_episode(scene, cell, cfg);

  int cumulative = 0;
  for (const GraspRound& round : result.log.rounds) {
    cumulative += round.picks();
    ReportRow row;
    row.scenario = spec.name;
    row.trial = trial;
    row.bin = bin;
    row.round = round.index;
    row.robots_used = round.aborted ? 0 : round.robots_used();
    row.picks = round.picks();
    row.picks_cumulative = cumulative;
    row.success = !round.aborted && round.robots_used() > 0 &&
                  round.picks() == round.robots_used();
    row.task_ms = round.task_ms;
    row.motion_ms = round.motion_ms;
    result.rows.push_back(row);
  }
  return result;
}

ScenarioSummary summarize(const ScenarioSpec& spec,
                          const std::vector<EpisodeResult>& episodes) {
  ScenarioSummary s;
  s.scenario = spec.name;
  s.episodes = static_cast<int>(episodes.size());

  std::vector<double> task_times, motion_times;
  size_t longest = 0;
  for (const EpisodeResult& e : episodes) {
    s.total_rounds += static_cast<long>(e.rows.size());
    s.total_picks += e.log.total_picks;
    if (e.log.cleared) ++s.cleared_episodes;
    if (!e.log.rounds.empty() && e.log.rounds.back().aborted) ++s.aborted_episodes;
    for (const auto& [n, c] : e.log.robots_used_histogram) s.robots_used_histogram[n] += c;
    for (const GraspRound& r : e.log.rounds)
      if (!r.aborted) {
        task_times.push_back(r.task_ms);
        motion_times.push_back(r.motion_ms);
      }
    longest = std::max(longest, e.rows.size());
  }
  s.median_task_ms = task_times.empty() ? 0.0 : median(task_times);
  s.median_motion_ms = motion_times.empty() ? 0.0 : median(motion_times);

  // Cumulative-picks curve: episodes shorter than a round index carry their
  // final value forward. The interval is over per-trial means.
  for (size_t k = 0; k < longest; ++k) {
    std::vector<double> per_trial_sums(spec.trials, 0.0);
    std::vector<int> per_trial_counts(spec.trials, 0);
    for (const EpisodeResult& e : episodes) {
      if (e.rows.empty()) continue;
      const int trial = e.rows.front().trial;
      const size_t idx = std::min(k, e.rows.size() - 1);
      per_trial_sums[trial] += e.rows[idx].picks_cumulative;
      per_trial_counts[trial] += 1;
    }
    std::vector<double> trial_means;
    for (int t = 0; t < spec.trials; ++t)
      if (per_trial_counts[t] > 0) trial_means.push_back(per_trial_sums[t] / per_trial_counts[t]);
    const auto [mean, hw] = mean_ci95(trial_means);
    s.mean_cumulative_picks.push_back(mean);
    s.ci95_halfwidth.push_back(hw);
  }
  return s;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("scenario: name is required");
  if (n_robots != 2 && n_robots != 4)
    throw std::invalid_argument("scenario: n_robots must be 2 or 4");
  if (n_bins < 1 || objects_per_bin < 1 || trials < 1)
    throw std::invalid_argument("scenario: n_bins, objects_per_bin, trials must be >= 1");
  if (max_rounds < 0 || p1_retry_limit < 0)
    throw std::invalid_argument("scenario: negative limits");
  if (grasps_per_object < 1)
    throw std::invalid_argument("scenario: grasps_per_object must be >= 1");
  if (planner.time_budget_ms <= 0.0)
    throw std::invalid_argument("scenario: planner time budget must be positive");
  if (n_robots != 2 && (policy.kind == PolicyName::distance_aware ||
                        policy.kind == PolicyName::quality_aware))
    throw std::invalid_argument("scenario: pairwise policies need exactly two robots");
}

double ScenarioSummary::robots_used_pct(int n) const {
  long total = 0;
  for (const auto& [k, c] : robots_used_histogram) total += c;
  if (total == 0) return 0.0;
  const auto it = robots_used_histogram.find(n);
  return it == robots_used_histogram.end() ? 0.0 : 100.0 * it->second / total;
}

SuiteResult run_scenario_suite(const std::vector<ScenarioSpec>& specs, int jobs) {
  SuiteResult result;
  for (const ScenarioSpec& spec : specs) {
    spec.validate();
    const Workcell cell =
        spec.n_robots == 4 ? make_four_arm_workcell() : make_dual_arm_workcell();

    const int n_episodes = spec.n_bins * spec.trials;
    std::vector<EpisodeResult> episodes(n_episodes);
    run_indexed(n_episodes, jobs, [&](int i) {
      episodes[i] = run_one_episode(spec, cell, i / spec.trials, i % spec.trials);
    });

    for (const EpisodeResult& e : episodes)
      result.rows.insert(result.rows.end(), e.rows.begin(), e.rows.end());
    result.summaries.push_back(summarize(spec, episodes));
  }
  return result;
}

PlannerBenchResult benchmark_planners(int n_scenarios,
                                      const std::vector<PlannerConfig>& planners,
                                      std::uint64_t seed, int jobs, bool validate_paths) {
  const Workcell cell = make_dual_arm_workcell();

  // Identical problem set for every planner: a kinematic-feasibility
  // assignment over random clutter, planned from home.
  struct Problem {
    PlanningProblem planning;
    bool ok = false;
  };
  std::vector<Problem> problems(n_scenarios);
  run_indexed(n_scenarios, jobs, [&](int i) {
    const Placement placement = i % 2 == 0 ? Placement::centred : Placement::excentred;
    const BinScene scene =
        generate_scene(placement, 10, mix_seed(seed, 0x9e11, i));
    const Workcell cell_objs = with_objects(cell, scene);
    const GraspMap map = propose_grasps(scene, 5, mix_seed(seed, 0x6a5b, i));
    std::vector<std::vector<ReachableGrasp>> reachable;
    for (const SerialArm& arm : cell_objs.arms)
      reachable.push_back(reachable_grasps(arm, map, cell_objs));
    const auto action =
        assign_kin_feasibility(reachable, cell_objs, 200, mix_seed(seed, 0xfe, i));
    if (!action) return;
    Problem& p = problems[i];
    p.planning.cell = cell_objs;
    p.planning.start = home_composite(cell_objs);
    p.planning.goal.clear();
    for (int r = 0; r < cell_objs.n_arms(); ++r) {
      const auto& a = action->assignments[r];
      p.planning.goal.push_back(a ? a->grasp_config : cell_objs.arms[r].home);
      if (a) p.planning.active_robots.insert(r);
    }
    p.planning.ignore_objects = action->target_object_ids();
    p.ok = true;
  });

  PlannerBenchResult result;
  std::vector<std::vector<PlannerRow>> rows_by_problem(n_scenarios);
  run_indexed(n_scenarios, jobs, [&](int i) {
    if (!problems[i].ok) return;
    for (size_t p = 0; p < planners.size(); ++p) {
      PlannerConfig pc = planners[p];
      pc.rng_seed = mix_seed(seed, 0x91a7, i, p);
      const PlanResult plan_result = plan(problems[i].planning, pc);
      PlannerRow row;
      row.planner = planner_name(pc.kind);
      row.scenario = i;
      row.solved = plan_result ? 1 : 0;
      row.solve_ms = plan_result.solve_ms;
      row.total_ms = plan_result.total_ms;
      row.cost = plan_result ? plan_result.plan.cost : -1.0;
      if (validate_paths && plan_result)
        row.path_valid = validate_path(plan_result.plan, problems[i].planning.cell,
                                       problems[i].planning.ignore_objects)
                             ? 1
                             : 0;
      rows_by_problem[i].push_back(row);
    }
  });

  std::map<std::string, std::vector<double>> solve_times;
  std::map<std::string, std::pair<int, int>> solved_counts;  // solved, attempted
  for (const auto& rows : rows_by_problem)
    for (const PlannerRow& row : rows) {
      result.rows.push_back(row);
      auto& [solved, attempted] = solved_counts[row.planner];
      ++attempted;
      if (row.solved) {
        ++solved;
        solve_times[row.planner].push_back(row.solve_ms);
      }
    }
  for (auto& [name, times] : solve_times) result.median_solve_ms[name] = median(times);
  for (const auto& [name, counts] : solved_counts)
    result.success_rate[name] =
        counts.second ? static_cast<double>(counts.first) / counts.second : 0.0;
  return result;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_report(const std::vector<ReportRow>& rows, ReportFormat format,
                  std::ostream& out) {
  if (format == ReportFormat::csv) {
    out << "scenario,trial,bin,round,robots_used,picks,picks_cumulative,success,"
           "task_ms,motion_ms\n";
    for (const ReportRow& r : rows)
      out << r.scenario << ',' << r.trial << ',' << r.bin << ',' << r.round << ','
          << r.robots_used << ',' << r.picks << ',' << r.picks_cumulative << ','
          << r.success << ',' << fmt(r.task_ms) << ',' << fmt(r.motion_ms) << '\n';
    return;
  }
  nlohmann::json arr = nlohmann::json::array();
  for (const ReportRow& r : rows)
    arr.push_back({{"scenario", r.scenario},
                   {"trial", r.trial},
                   {"bin", r.bin},
                   {"round", r.round},
                   {"robots_used", r.robots_used},
                   {"picks", r.picks},
                   {"picks_cumulative", r.picks_cumulative},
                   {"success", r.success},
                   {"task_ms", r.task_ms},
                   {"motion_ms", r.motion_ms}});
  out << arr.dump(2) << '\n';
}

void write_report(const std::vector<PlannerRow>& rows, ReportFormat format,
                  std::ostream& out) {
  if (format == ReportFormat::csv) {
    out << "planner,scenario,solved,solve_ms,total_ms,cost,path_valid\n";
    for (const PlannerRow& r : rows)
      out << r.planner << ',' << r.scenario << ',' << r.solved << ',' << fmt(r.solve_ms)
          << ',' << fmt(r.total_ms) << ',' << fmt(r.cost) << ',' << r.path_valid << '\n';
    return;
  }
  nlohmann::json arr = nlohmann::json::array();
  for (const PlannerRow& r : rows)
    arr.push_back({{"planner", r.planner},
                   {"scenario", r.scenario},
                   {"solved", r.solved},
                   {"solve_ms", r.solve_ms},
                   {"total_ms", r.total_ms},
                   {"cost", r.cost},
                   {"path_valid", r.path_valid}});
  out << arr.dump(2) << '\n';
}

void emit_report(const std::vector<ReportRow>& rows, ReportFormat format,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_report: cannot open " + path);
  write_report(rows, format, out);
}

void emit_report(const std::vector<PlannerRow>& rows, ReportFormat format,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_report: cannot open " + path);
  write_report(rows, format, out);
}

std::vector<ReportRow> parse_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_report: cannot open " + path);
  std::vector<ReportRow> rows;

  char first = 0;
  in >> first;
  in.seekg(0);
  if (first == '[') {
    nlohmann::json arr = nlohmann::json::parse(in);
    for (const auto& j : arr) {
      ReportRow r;
      r.scenario = j.at("scenario").get<std::string>();
      r.trial = j.at("trial").get<int>();
      r.bin = j.at("bin").get<int>();
      r.round = j.at("round").get<int>();
      r.robots_used = j.at("robots_used").get<int>();
      r.picks = j.at("picks").get<int>();
      r.picks_cumulative = j.at("picks_cumulative").get<int>();
      r.success = j.at("success").get<int>();
      r.task_ms = j.at("task_ms").get<double>();
      r.motion_ms = j.at("motion_ms").get<double>();
      rows.push_back(r);
    }
    return rows;
  }

  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line.rfind("scenario,", 0) != 0)
    throw std::runtime_error("parse_report: unrecognized header: " + line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10)
      throw std::runtime_error("parse_report: malformed row: " + line);
    ReportRow r;
    r.scenario = fields[0];
    r.trial = std::stoi(fields[1]);
    r.bin = std::stoi(fields[2]);
    r.round = std::stoi(fields[3]);
    r.robots_used = std::stoi(fields[4]);
    r.picks = std::stoi(fields[5]);
    r.picks_cumulative = std::stoi(fields[6]);
    r.success = std::stoi(fields[7]);
    r.task_ms = std::stod(fields[8]);
    r.motion_ms = std::stod(fields[9]);
    rows.push_back(r);
  }
  return rows;
}

namespace {

ScenarioSpec base_spec(const std::string& name, std::uint64_t seed, bool quick) {
  ScenarioSpec spec;
  spec.name = name;
  spec.base_seed = seed;
  spec.n_bins = quick ? 3 : 10;
  spec.trials = quick ? 3 : 10;
  spec.objects_per_bin = 10;
  spec.planner.kind = PlannerKind::bit_star;
  spec.planner.time_budget_ms = 60.0;
  return spec;
}

ScenarioSpec with_policy(ScenarioSpec spec, PolicyName policy) {
  spec.policy.kind = policy;
  spec.name += "_" + policy_name(policy);
  return spec;
}

}  // namespace

std::vector<ScenarioSpec> centred_suite(std::uint64_t seed, bool quick) {
  const ScenarioSpec base = base_spec("centred", seed, quick);
  return {with_policy(base, PolicyName::sequential),
          with_policy(base, PolicyName::split_space),
          with_policy(base, PolicyName::kin_feasibility)};
}

std::vector<ScenarioSpec> excentred_suite(std::uint64_t seed, bool quick) {
  ScenarioSpec base = base_spec("excentred", seed, quick);
  base.placement = Placement::excentred;
  return {with_policy(base, PolicyName::split_space),
          with_policy(base, PolicyName::kin_feasibility)};
}

std::vector<ScenarioSpec> policy_variant_suite(std::uint64_t seed, bool quick) {
  const ScenarioSpec base = base_spec("variant", seed, quick);
  return {with_policy(base, PolicyName::kin_feasibility),
          with_policy(base, PolicyName::distance_aware),
          with_policy(base, PolicyName::quality_aware)};
}

std::vector<ScenarioSpec> four_arm_suite(std::uint64_t seed, bool quick) {
  // One object per robot: the bin clears in a single four-grasp round when
  // every assignment works out.
  ScenarioSpec spec = base_spec("four_arm", seed, quick);
  spec.n_robots = 4;
  spec.objects_per_bin = 4;
  spec.policy.kind = PolicyName::kin_feasibility;
  spec.grasps_per_object = 8;
  spec.planner.time_budget_ms = 25.0;
  return {spec};
}

std::pair<double, double> mean_ci95(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double stddev = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(dist, 0.975);
  return {mean, t * stddev / std::sqrt(n)};
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace binpick
