#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "binpick/workcell.hpp"

namespace binpick {

/// Composite-space planning problem. Robots not in active_robots are held
/// fixed at their start configuration.
struct PlanningProblem {
  Workcell cell;
  CompositeConfig start;
  CompositeConfig goal;
  std::set<int> ignore_objects;
  std::set<int> active_robots;
};

enum class PlannerKind { rrt, rrt_connect, rrt_star, bit_star };

struct PlannerConfig {
  PlannerKind kind = PlannerKind::bit_star;
  double step_size = 0.35;           // radians, composite-norm extension step
  double goal_bias = 0.1;
  int batch_size = 100;              // BIT* samples per batch
  double time_budget_ms = 1000.0;
  std::uint64_t rng_seed = 0;
  double rewire_radius_scale = 1.1;  // RRT* gamma multiplier
};

/// Max joint-step between collision-checked configs on an edge, radians.
inline constexpr double kCheckResolution = 0.01;

/// Timed composite path. Waypoints are piecewise-linear in time; segment
/// durations follow a trapezoidal profile at 1.0 rad/s speed and 2.0 rad/s^2
/// acceleration caps on the worst-case joint.
struct PathPlan {
  std::vector<CompositeConfig> waypoints;
  std::vector<double> timestamps;  // seconds, strictly increasing
  double cost = 0.0;               // composite joint-space arc length

  bool empty() const { return waypoints.empty(); }
  double duration() const { return timestamps.empty() ? 0.0 : timestamps.back(); }
};

enum class PlanStatus { ok, infeasible_timeout, invalid_endpoints };

struct PlanResult {
  PlanStatus status = PlanStatus::infeasible_timeout;
  PathPlan plan;
  std::vector<double> cost_history;  // incumbent costs, non-increasing
  long evals_used = 0;               // collision-checked configs
  long evals_to_first = -1;          // evals when the first solution appeared
  double solve_ms = -1.0;            // wall time to the first solution
  double total_ms = 0.0;
  int failed_robot = -1;             // prioritized planning: stage that failed

  explicit operator bool() const { return status == PlanStatus::ok; }
};

/// Time budgets are realized as deterministic collision-evaluation budgets
/// (time_budget_ms * kEvalsPerMs) so identical seeds give identical plans.
/// Calibrated against the dual-arm collision checker on commodity x86.
inline constexpr double kEvalsPerMs = 150.0;

/// Plan a composite-space path. RRT and RRT-Connect return the first
/// solution; RRT* and BIT* keep improving until the budget and return the
/// best path found. Deterministic per config.rng_seed.
PlanResult plan(const PlanningProblem& problem, const PlannerConfig& config);

/// Prioritized planning: the first robot in priority_order plans alone, each
/// later robot plans in config-time space against the timed motion of the
/// robots before it. Returns the merged composite path on a common timeline.
PlanResult plan_prioritized(const PlanningProblem& problem, const PlannerConfig& config,
                            const std::vector<int>& priority_order);

/// Independent path checker: true iff every interpolated composite config at
/// max joint-step <= resolution is collision-free. Throws on an empty path.
bool validate_path(const PathPlan& path, const Workcell& cell,
                   const std::set<int>& ignore_objects = {},
                   double resolution = kCheckResolution);

/// Sum over segments of the composite joint-space Euclidean norm.
double path_cost(const PathPlan& path);

/// Composite config at time t (clamped to the path's time range).
CompositeConfig sample_path(const PathPlan& path, double t);

/// Trapezoidal segment duration for a worst-joint displacement d.
double segment_duration(double max_joint_delta);

std::string planner_name(PlannerKind kind);
PlannerKind planner_from_name(const std::string& name);

}  // namespace binpick
