#include <doctest.h>

#include <set>

#include "binpick/pipeline.hpp"
#include "binpick/rng.hpp"
#include "test_util.hpp"

using namespace binpick;

namespace {

PipelineConfig quick_config(std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.policy.kind = PolicyName::kin_feasibility;
  cfg.policy.sample_budget = 150;
  cfg.planner.kind = PlannerKind::bit_star;
  cfg.planner.time_budget_ms = 60.0;
  cfg.max_rounds = 12;
  cfg.rng_seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("an episode clears a small bin deterministically") {
  const BinScene scene = generate_scene(Placement::centred, 4, 1234);
  const Workcell cell = make_dual_arm_workcell();
  const EpisodeLog log = run_episode(scene, cell, quick_config(5));

  CHECK(log.cleared);
  CHECK(log.total_picks == 4);
  CHECK(!log.rounds.empty());

  int hist_rounds = 0, picks = 0;
  for (const auto& [robots, count] : log.robots_used_histogram) hist_rounds += count;
  std::set<int> picked_objects;
  for (const GraspRound& round : log.rounds) {
    CHECK(!round.aborted);
    picks += round.picks();
    CHECK(round.picks() <= round.robots_used());
    CHECK(round.robots_used() <= cell.n_arms());
    CHECK(round.task_ms >= 0.0);
    CHECK(round.motion_ms >= 0.0);
    CHECK(round.total_ms >= 0.0);
    for (size_t r = 0; r < round.action.assignments.size(); ++r)
      if (round.action.assignments[r] && round.rewards[r])
        CHECK(picked_objects.insert(round.action.assignments[r]->proposal.object_id).second);
  }
  CHECK(hist_rounds == static_cast<int>(log.rounds.size()));
  CHECK(picks == 4);
  CHECK(picked_objects.size() == 4);

  // bitwise replay: same seeds, same decisions
  const EpisodeLog again = run_episode(scene, cell, quick_config(5));
  REQUIRE(again.rounds.size() == log.rounds.size());
  for (size_t k = 0; k < log.rounds.size(); ++k) {
    CHECK(action_key(again.rounds[k].action) == action_key(log.rounds[k].action));
    CHECK(again.rounds[k].rewards == log.rounds[k].rewards);
    CHECK(again.rounds[k].to_grasp.cost == log.rounds[k].to_grasp.cost);
  }
}

TEST_CASE("executed rounds carry validated paths") {
  const BinScene scene = generate_scene(Placement::centred, 4, 777);
  const Workcell cell = make_dual_arm_workcell();
  const EpisodeLog log = run_episode(scene, cell, quick_config(11));

  BinScene state = log.initial_scene;
  for (const GraspRound& round : log.rounds) {
    if (round.aborted || round.robots_used() == 0) continue;
    REQUIRE(!round.to_grasp.empty());
    REQUIRE(!round.to_drop.empty());
    // the to-grasp path is collision-free in the cell holding today's objects,
    // ignoring the grasp targets
    const Workcell cell_objs = with_objects(cell, state);
    CHECK(validate_path(round.to_grasp, cell_objs, round.action.target_object_ids()));
    // the to-drop path carries the objects on the grippers
    const Workcell carrying = attach_grasped_objects(cell_objs, state, round.action);
    CHECK(validate_path(round.to_drop, carrying, round.action.target_object_ids()));
    for (size_t r = 0; r < round.action.assignments.size(); ++r)
      if (round.action.assignments[r] && round.rewards[r])
        state = remove_object(state, round.action.assignments[r]->proposal.object_id);
  }
  CHECK(state.live_count() == 0);
}

TEST_CASE("attach_grasped_objects moves targets from obstacles to grippers") {
  const BinScene scene = generate_scene(Placement::centred, 6, 901);
  const Workcell cell = with_objects(make_dual_arm_workcell(), scene);
  const GraspMap map = propose_grasps(scene, 5, 3);
  std::vector<std::vector<ReachableGrasp>> reachable;
  for (const SerialArm& arm : cell.arms)
    reachable.push_back(reachable_grasps(arm, map, cell));
  const auto action = assign_kin_feasibility(reachable, cell, 200, 17);
  REQUIRE(action.has_value());
  REQUIRE(action->n_assigned() >= 1);

  const Workcell attached = attach_grasped_objects(cell, scene, *action);
  const std::set<int> targets = action->target_object_ids();
  CHECK(attached.objects.size() == cell.objects.size() - targets.size());
  for (const ObjectObstacle& o : attached.objects) CHECK(targets.count(o.id) == 0);
  for (size_t r = 0; r < action->assignments.size(); ++r) {
    const size_t before = cell.arms[r].link_shapes.size();
    const size_t after = attached.arms[r].link_shapes.size();
    if (action->assignments[r])
      CHECK(after == before + 1);
    else
      CHECK(after == before);
  }
}

TEST_CASE("success model gates rewards on grasp quality") {
  // Deterministic model: a pick succeeds exactly when the grasp quality
  // reaches the threshold. Verified on executed episodes.
  const BinScene scene = generate_scene(Placement::centred, 6, 2024);
  const Workcell cell = make_dual_arm_workcell();
  PipelineConfig cfg = quick_config(2);
  cfg.max_rounds = 18;
  const EpisodeLog log = run_episode(scene, cell, cfg);
  int executed = 0;
  for (const GraspRound& round : log.rounds) {
    for (size_t r = 0; r < round.action.assignments.size(); ++r) {
      if (!round.action.assignments[r]) continue;
      ++executed;
      const bool expect = round.action.assignments[r]->proposal.quality >= kSuccessQuality;
      CHECK(round.rewards[r] == (expect ? 1 : 0));
    }
  }
  CHECK(executed > 0);
}

TEST_CASE("stochastic rewards are seeded and within range") {
  const BinScene scene = generate_scene(Placement::centred, 4, 3030);
  const Workcell cell = make_dual_arm_workcell();
  PipelineConfig cfg = quick_config(9);
  cfg.success_model = SuccessModel::stochastic;
  const EpisodeLog a = run_episode(scene, cell, cfg);
  const EpisodeLog b = run_episode(scene, cell, cfg);
  REQUIRE(a.rounds.size() == b.rounds.size());
  for (size_t k = 0; k < a.rounds.size(); ++k) {
    CHECK(a.rounds[k].rewards == b.rounds[k].rewards);
    for (int reward : a.rounds[k].rewards) CHECK((reward == 0 || reward == 1));
  }
}

TEST_CASE("a round on an empty scene aborts") {
  BinScene scene = generate_scene(Placement::centred, 4, 4040);
  for (const ObjectInstance& o : std::vector<ObjectInstance>(scene.objects))
    scene = remove_object(scene, o.id);
  const Workcell cell = make_dual_arm_workcell();
  const RoundOutcome outcome = run_round(scene, cell, quick_config(1), 0);
  CHECK(outcome.round.aborted);
  CHECK(outcome.round.picks() == 0);
  const EpisodeLog log = run_episode(scene, cell, quick_config(1));
  CHECK(!log.cleared);
  CHECK(log.total_picks == 0);
}

TEST_CASE("planner starvation blacklists the failing combination") {
  const BinScene scene = generate_scene(Placement::centred, 6, 5050);
  const Workcell cell = make_dual_arm_workcell();
  PipelineConfig cfg = quick_config(3);
  // a budget too small to ever plan forces the coarse level to exhaust and
  // blacklist its candidates
  cfg.planner.time_budget_ms = 0.001;
  GraspBlacklist blacklist;
  const RoundOutcome outcome = run_round(scene, cell, cfg, 0, &blacklist);
  CHECK(outcome.round.picks() == 0);
  CHECK(!blacklist.empty());
  // the scene is untouched on failure
  CHECK(outcome.scene.live_count() == scene.live_count());

  // with a sane budget the same round picks and leaves the blacklist alone
  GraspBlacklist clean;
  const RoundOutcome good = run_round(scene, cell, quick_config(3), 0, &clean);
  CHECK(good.round.picks() > 0);
  CHECK(clean.empty());
  CHECK(good.scene.live_count() == scene.live_count() - good.round.picks());
}

TEST_CASE("max_rounds caps an episode") {
  const BinScene scene = generate_scene(Placement::centred, 6, 6060);
  const Workcell cell = make_dual_arm_workcell();
  PipelineConfig cfg = quick_config(4);
  cfg.planner.time_budget_ms = 0.001;  // nothing ever plans
  cfg.max_rounds = 3;
  const EpisodeLog log = run_episode(scene, cell, cfg);
  CHECK(static_cast<int>(log.rounds.size()) <= 3);
  CHECK(!log.cleared);
  CHECK(log.total_picks == 0);
}

TEST_CASE("prioritized planning mode also clears the bin") {
  const BinScene scene = generate_scene(Placement::centred, 4, 7070);
  const Workcell cell = make_dual_arm_workcell();
  PipelineConfig cfg = quick_config(6);
  cfg.planning_mode = PlanningMode::prioritized;
  cfg.planner.kind = PlannerKind::rrt_connect;
  cfg.planner.time_budget_ms = 150.0;
  const EpisodeLog log = run_episode(scene, cell, cfg);
  CHECK(log.cleared);
  CHECK(log.total_picks == 4);
}

}  // TEST_SUITE
