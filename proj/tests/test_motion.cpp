#include <doctest.h>

#include <cmath>

#include "binpick/motion.hpp"
#include "binpick/rng.hpp"
#include "binpick/scene.hpp"
#include "binpick/workcell.hpp"
#include "test_util.hpp"

using namespace binpick;
using namespace binpick::testutil;

namespace {

// Seeded free-space dual-arm problems over a cluttered bin.
PlanningProblem random_problem(std::uint64_t seed) {
  PlanningProblem problem;
  problem.cell = with_objects(make_dual_arm_workcell(),
                              generate_scene(Placement::centred, 6, mix_seed(0x3333, seed)));
  auto rng = make_rng(mix_seed(0x4444, seed));
  problem.start = random_free_composite(problem.cell, rng);
  problem.goal = random_free_composite(problem.cell, rng);
  problem.active_robots = {0, 1};
  return problem;
}

double cost_oracle(const PathPlan& plan) {
  double c = 0.0;
  for (size_t i = 1; i < plan.waypoints.size(); ++i) {
    double step2 = 0.0;
    for (size_t r = 0; r < plan.waypoints[i].size(); ++r)
      step2 += (plan.waypoints[i][r] - plan.waypoints[i - 1][r]).squaredNorm();
    c += std::sqrt(step2);
  }
  return c;
}

PlannerConfig config_for(PlannerKind kind, double budget_ms, std::uint64_t seed) {
  PlannerConfig cfg;
  cfg.kind = kind;
  cfg.time_budget_ms = budget_ms;
  cfg.rng_seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("motion") {

TEST_CASE("trapezoidal segment durations") {
  // 1 rad/s velocity and 2 rad/s^2 acceleration caps: short moves are
  // triangular (2 * sqrt(d / a)), long moves cruise (d / v + v / a).
  CHECK(segment_duration(0.0) == 0.0);
  CHECK(segment_duration(0.1) == doctest::Approx(2.0 * std::sqrt(0.1 / 2.0)));
  CHECK(segment_duration(0.5) == doctest::Approx(1.0));  // boundary, both formulas
  CHECK(segment_duration(2.0) == doctest::Approx(2.5));
  CHECK(segment_duration(0.5 + 1e-9) == doctest::Approx(segment_duration(0.5)).epsilon(1e-6));
  // monotone in the move size
  double prev = 0.0;
  for (double d = 0.01; d < 3.0; d += 0.01) {
    const double t = segment_duration(d);
    CHECK(t > prev);
    prev = t;
  }
}

TEST_CASE("every planner solves and the paths verify") {
  for (PlannerKind kind : {PlannerKind::rrt, PlannerKind::rrt_connect, PlannerKind::rrt_star,
                           PlannerKind::bit_star}) {
    int solved = 0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      const PlanningProblem problem = random_problem(seed);
      const PlanResult result = plan(problem, config_for(kind, 150.0, seed));
      if (!result) continue;
      ++solved;
      const PathPlan& p = result.plan;
      REQUIRE(!p.empty());
      REQUIRE(p.waypoints.size() == p.timestamps.size());
      // endpoints match the problem
      for (size_t r = 0; r < p.waypoints.front().size(); ++r) {
        CHECK((p.waypoints.front()[r] - problem.start[r]).norm() < 1e-9);
        CHECK((p.waypoints.back()[r] - problem.goal[r]).norm() < 1e-9);
      }
      // timestamps strictly increase from zero
      CHECK(p.timestamps.front() == 0.0);
      for (size_t i = 1; i < p.timestamps.size(); ++i)
        CHECK(p.timestamps[i] > p.timestamps[i - 1]);
      // reported cost is the joint-space arc length
      CHECK(p.cost == doctest::Approx(cost_oracle(p)).epsilon(1e-9));
      // independent validation passes
      CHECK(validate_path(p, problem.cell, problem.ignore_objects));
      CHECK(result.evals_used > 0);
      CHECK(result.solve_ms >= 0.0);
      CHECK(result.total_ms >= result.solve_ms);
    }
    // every planner handles most of these low-clutter problems
    CHECK(solved >= 9);
  }
}

TEST_CASE("planning is deterministic in the seed") {
  const PlanningProblem problem = random_problem(3);
  for (PlannerKind kind : {PlannerKind::rrt_connect, PlannerKind::bit_star}) {
    const PlanResult a = plan(problem, config_for(kind, 100.0, 7));
    const PlanResult b = plan(problem, config_for(kind, 100.0, 7));
    REQUIRE(static_cast<bool>(a));
    REQUIRE(static_cast<bool>(b));
    REQUIRE(a.plan.waypoints.size() == b.plan.waypoints.size());
    for (size_t i = 0; i < a.plan.waypoints.size(); ++i)
      for (size_t r = 0; r < a.plan.waypoints[i].size(); ++r)
        CHECK(a.plan.waypoints[i][r] == b.plan.waypoints[i][r]);
    CHECK(a.plan.cost == b.plan.cost);
    CHECK(a.evals_used == b.evals_used);
  }
}

TEST_CASE("invalid endpoints are rejected") {
  PlanningProblem problem = random_problem(4);
  // a goal standing inside the floor is never plannable
  CompositeConfig buried = problem.goal;
  const PlanResult before = plan(problem, config_for(PlannerKind::rrt_connect, 50.0, 1));
  REQUIRE(static_cast<bool>(before));
  for (auto& q : buried) q.setZero();
  PlanningProblem bad = problem;
  bad.goal = buried;
  // zero configs point both arms straight up into each other's space; if
  // that happens to be free this test would need a different poison config,
  // so assert on the classified status only when the endpoint collides.
  if (collision_check(bad.cell, buried)) {
    const PlanResult result = plan(bad, config_for(PlannerKind::rrt_connect, 50.0, 1));
    CHECK(result.status == PlanStatus::invalid_endpoints);
    CHECK(!result);
  }
}

TEST_CASE("start equals goal is a trivial solve") {
  PlanningProblem problem = random_problem(5);
  problem.goal = problem.start;
  const PlanResult result = plan(problem, config_for(PlannerKind::rrt, 50.0, 2));
  REQUIRE(static_cast<bool>(result));
  CHECK(result.plan.cost == doctest::Approx(0.0).scale(1.0));
  CHECK(validate_path(result.plan, problem.cell, problem.ignore_objects));
}

TEST_CASE("time budget caps the collision evaluations") {
  const PlanningProblem problem = random_problem(6);
  const double budget_ms = 30.0;
  for (PlannerKind kind : {PlannerKind::rrt, PlannerKind::rrt_star, PlannerKind::bit_star}) {
    const PlanResult result = plan(problem, config_for(kind, budget_ms, 3));
    // deterministic budget: evaluations, not wall time
    CHECK(result.evals_used <= static_cast<long>(budget_ms * kEvalsPerMs) + 1);
  }
}

TEST_CASE("anytime cost history is non-increasing and ends at the result") {
  int with_history = 0;
  for (std::uint64_t seed = 20; seed < 32; ++seed) {
    const PlanningProblem problem = random_problem(seed);
    const PlanResult result = plan(problem, config_for(PlannerKind::bit_star, 200.0, seed));
    if (!result) continue;
    REQUIRE(!result.cost_history.empty());
    for (size_t i = 1; i < result.cost_history.size(); ++i)
      CHECK(result.cost_history[i] <= result.cost_history[i - 1] + 1e-12);
    CHECK(result.plan.cost == doctest::Approx(result.cost_history.back()).epsilon(1e-9));
    if (result.cost_history.size() > 1) ++with_history;
    CHECK(result.evals_to_first > 0);
    CHECK(result.evals_to_first <= result.evals_used);
  }
  // the anytime planner actually improves some solutions at this budget
  CHECK(with_history >= 1);
}

TEST_CASE("validate_path flags teleports and collisions") {
  const PlanningProblem problem = random_problem(8);
  const PlanResult result = plan(problem, config_for(PlannerKind::rrt_connect, 100.0, 4));
  REQUIRE(static_cast<bool>(result));

  // wrecking a waypoint into a colliding configuration invalidates the path
  PathPlan broken = result.plan;
  REQUIRE(broken.waypoints.size() >= 2);
  auto rng = make_rng(808);
  CompositeConfig poison;
  bool found = false;
  for (int t = 0; t < 500 && !found; ++t) {
    poison.clear();
    for (const SerialArm& arm : problem.cell.arms) poison.push_back(random_config(arm, rng));
    found = collision_check(problem.cell, poison, problem.ignore_objects);
  }
  REQUIRE(found);
  broken.waypoints[broken.waypoints.size() / 2] = poison;
  CHECK(!validate_path(broken, problem.cell, problem.ignore_objects));

  CHECK_THROWS(validate_path(PathPlan{}, problem.cell));
}

TEST_CASE("sample_path interpolates the timed waypoints") {
  const PlanningProblem problem = random_problem(9);
  const PlanResult result = plan(problem, config_for(PlannerKind::rrt_connect, 100.0, 5));
  REQUIRE(static_cast<bool>(result));
  const PathPlan& p = result.plan;

  const CompositeConfig at_start = sample_path(p, 0.0);
  const CompositeConfig at_end = sample_path(p, p.duration());
  for (size_t r = 0; r < at_start.size(); ++r) {
    CHECK((at_start[r] - p.waypoints.front()[r]).norm() < 1e-12);
    CHECK((at_end[r] - p.waypoints.back()[r]).norm() < 1e-12);
  }
  // clamped outside the time range
  const CompositeConfig late = sample_path(p, p.duration() + 5.0);
  for (size_t r = 0; r < late.size(); ++r)
    CHECK((late[r] - p.waypoints.back()[r]).norm() < 1e-12);

  // midpoint of a segment is the linear blend
  if (p.waypoints.size() >= 2) {
    const double t = 0.5 * (p.timestamps[0] + p.timestamps[1]);
    const double u = (t - p.timestamps[0]) / (p.timestamps[1] - p.timestamps[0]);
    const CompositeConfig mid = sample_path(p, t);
    for (size_t r = 0; r < mid.size(); ++r) {
      const Eigen::VectorXd want =
          (1.0 - u) * p.waypoints[0][r] + u * p.waypoints[1][r];
      CHECK((mid[r] - want).norm() < 1e-12);
    }
  }
}

TEST_CASE("prioritized planning avoids the earlier robot's swept path") {
  int checked = 0;
  for (std::uint64_t seed = 40; seed < 52 && checked < 6; ++seed) {
    const PlanningProblem problem = random_problem(seed);
    const PlanResult result =
        plan_prioritized(problem, config_for(PlannerKind::rrt_connect, 200.0, seed), 0x91);
    if (!result) continue;
    ++checked;
    const PathPlan& p = result.plan;
    // endpoints honored for every robot
    for (size_t r = 0; r < p.waypoints.front().size(); ++r) {
      CHECK((p.waypoints.front()[r] - problem.start[r]).norm() < 1e-9);
      CHECK((p.waypoints.back()[r] - problem.goal[r]).norm() < 1e-9);
    }
    // the timed composite path never brings the arms into contact
    const int steps = 200;
    double min_pair = 1e300;
    for (int i = 0; i <= steps; ++i) {
      const CompositeConfig c = sample_path(p, p.duration() * i / steps);
      min_pair = std::min(min_pair, arm_pair_distance(problem.cell, c, 0, 1));
    }
    CHECK(min_pair > 0.0);
  }
  CHECK(checked >= 4);
}

TEST_CASE("planner names round trip") {
  for (PlannerKind k : {PlannerKind::rrt, PlannerKind::rrt_connect, PlannerKind::rrt_star,
                        PlannerKind::bit_star})
    CHECK(planner_from_name(planner_name(k)) == k);
  CHECK_THROWS(planner_from_name("dijkstra"));
}

}  // TEST_SUITE
