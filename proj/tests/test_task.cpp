#include <doctest.h>

#include <algorithm>
#include <set>
#include <unordered_set>

#include "binpick/rng.hpp"
#include "binpick/task.hpp"
#include "binpick/workcell.hpp"
#include "test_util.hpp"

using namespace binpick;

namespace {

struct Instance {
  BinScene scene;
  Workcell cell;
  std::vector<std::vector<ReachableGrasp>> reachable;
};

// Reachable sets truncated to at most `cap` grasps per robot so exhaustive
// enumeration stays tiny.
Instance make_instance(std::uint64_t seed, int n_objects, int cap) {
  Instance inst;
  inst.scene = generate_scene(seed % 2 ? Placement::excentred : Placement::centred,
                              n_objects, mix_seed(0x7e57, seed));
  inst.cell = with_objects(make_dual_arm_workcell(), inst.scene);
  const GraspMap map = propose_grasps(inst.scene, 3, mix_seed(0x9ab, seed));
  for (const SerialArm& arm : inst.cell.arms) {
    auto reach = reachable_grasps(arm, map, inst.cell);
    if (static_cast<int>(reach.size()) > cap) reach.resize(cap);
    inst.reachable.push_back(std::move(reach));
  }
  return inst;
}

JointAction pair_action(const Instance& inst, size_t i, size_t j) {
  JointAction action;
  action.assignments = {inst.reachable[0][i], inst.reachable[1][j]};
  action.order_hint = OrderHint::simultaneous;
  return action;
}

double spread_of(const JointAction& a) {
  return (a.assignments[0]->proposal.pose.translation -
          a.assignments[1]->proposal.pose.translation)
      .norm();
}

double quality_of(const JointAction& a) {
  double q = 0.0;
  for (const auto& g : a.assignments)
    if (g) q += g->proposal.quality;
  return q;
}

// Exhaustive best feasible pair under `score`; nullopt when no disjoint
// feasible pair exists.
template <typename Score>
std::optional<double> best_pair_score(const Instance& inst, Score score) {
  std::optional<double> best;
  for (size_t i = 0; i < inst.reachable[0].size(); ++i)
    for (size_t j = 0; j < inst.reachable[1].size(); ++j) {
      if (inst.reachable[0][i].proposal.object_id == inst.reachable[1][j].proposal.object_id)
        continue;
      JointAction a = pair_action(inst, i, j);
      if (!joint_action_feasible(inst.cell, a)) continue;
      const double s = score(a);
      if (!best || s > *best) best = s;
    }
  return best;
}

}  // namespace

TEST_SUITE("task") {

TEST_CASE("grasp keys separate distinct proposals") {
  // Within one proposal map, keys must be unique: distinct objects differ by
  // id, same-object proposals by approach angle (spaced far beyond the key's
  // angle quantum).
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const BinScene scene = generate_scene(Placement::centred, 10, 80 + seed);
    const GraspMap map = propose_grasps(scene, 5, seed);
    std::unordered_set<std::uint64_t> keys;
    for (const GraspProposal& g : map.proposals) {
      CHECK(grasp_key(g) == grasp_key(g));  // stable
      CHECK(keys.insert(grasp_key(g)).second);
    }
    CHECK(keys.size() == map.proposals.size());
  }

  // quality enters the key: the same pose at a different quality is a
  // different grasp for blacklisting purposes
  GraspProposal g;
  g.object_id = 3;
  g.pose = Pose::from_translation({0.1, 0.0, 0.2});
  g.quality = 0.8;
  GraspProposal g2 = g;
  g2.quality = 0.4;
  CHECK(grasp_key(g) != grasp_key(g2));
}

TEST_CASE("action keys cover the whole robot-grasp combination") {
  const Instance inst = make_instance(1, 6, 5);
  REQUIRE(inst.reachable[0].size() >= 2);
  REQUIRE(inst.reachable[1].size() >= 2);
  const JointAction a = pair_action(inst, 0, 1);
  const JointAction b = pair_action(inst, 1, 0);
  CHECK(action_key(a) == action_key(a));
  CHECK(action_key(a) != action_key(b));  // robots swapped is a different combination

  JointAction solo;
  solo.assignments = {inst.reachable[0][0], std::nullopt};
  CHECK(action_key(solo) != action_key(a));
}

TEST_CASE("joint actions never share a target object") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = make_instance(seed, 8, 8);
    PolicyKind kin;
    kin.kind = PolicyName::kin_feasibility;
    kin.sample_budget = 100;
    kin.rng_seed = seed;
    for (const JointAction& a :
         policy_candidates(kin, inst.reachable, inst.cell, 0, 4)) {
      CHECK(a.target_object_ids().size() == static_cast<size_t>(a.n_assigned()));
      CHECK(joint_action_feasible(inst.cell, a));
    }
  }
}

TEST_CASE("sequential assigns exactly one robot its best grasp") {
  std::set<size_t> robots_seen;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Instance inst = make_instance(3, 8, 6);
    const auto action = assign_sequential(inst.reachable, 0, seed);
    REQUIRE(action.has_value());
    CHECK(action->n_assigned() == 1);
    for (size_t r = 0; r < action->assignments.size(); ++r) {
      if (!action->assignments[r]) continue;
      robots_seen.insert(r);
      // the chosen robot takes its highest-quality reachable grasp
      double best = 0.0;
      for (const ReachableGrasp& g : inst.reachable[r])
        best = std::max(best, g.proposal.quality);
      CHECK(action->assignments[r]->proposal.quality == doctest::Approx(best));
    }
    // deterministic in the seed
    const auto again = assign_sequential(inst.reachable, 0, seed);
    REQUIRE(again.has_value());
    for (size_t r = 0; r < action->assignments.size(); ++r)
      CHECK(action->assignments[r].has_value() == again->assignments[r].has_value());
  }
  CHECK(robots_seen.size() == 2);  // both robots get turns across seeds

  const std::vector<std::vector<ReachableGrasp>> empty(2);
  CHECK(!assign_sequential(empty, 0, 1).has_value());
}

TEST_CASE("split_space respects base-proximity ownership") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = make_instance(seed, 8, 10);
    const auto action = assign_split_space(inst.reachable, inst.cell);
    REQUIRE(action.has_value());
    CHECK(action->n_assigned() >= 1);
    for (size_t r = 0; r < action->assignments.size(); ++r) {
      if (!action->assignments[r]) continue;
      const Eigen::Vector3d g = action->assignments[r]->proposal.pose.translation;
      const double own = (g - inst.cell.arms[r].base_pose.translation).norm();
      for (size_t other = 0; other < inst.cell.arms.size(); ++other) {
        if (static_cast<int>(other) == static_cast<int>(r)) continue;
        const double theirs = (g - inst.cell.arms[other].base_pose.translation).norm();
        if (action->n_assigned() > 1) CHECK(own <= theirs + 1e-9);
      }
    }
    if (action->n_assigned() == 2) CHECK(joint_action_feasible(inst.cell, *action));
  }
}

TEST_CASE("kin_feasibility returns feasible actions and honors bans") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Instance inst = make_instance(seed, 8, 8);
    const auto action = assign_kin_feasibility(inst.reachable, inst.cell, 200, seed);
    REQUIRE(action.has_value());
    CHECK(joint_action_feasible(inst.cell, *action));
    CHECK(action->target_object_ids().size() == static_cast<size_t>(action->n_assigned()));

    // deterministic in the seed
    const auto again = assign_kin_feasibility(inst.reachable, inst.cell, 200, seed);
    REQUIRE(again.has_value());
    CHECK(action_key(*action) == action_key(*again));

    // banning the returned combination forces a different one
    if (action->n_assigned() > 1) {
      GraspBlacklist banned{action_key(*action)};
      const auto next =
          assign_kin_feasibility(inst.reachable, inst.cell, 200, seed, &banned);
      if (next.has_value()) CHECK(action_key(*next) != action_key(*action));
    }
  }
}

TEST_CASE("distance policy maximizes pairwise grasp spread") {
  int pair_instances = 0;
  for (std::uint64_t seed = 0; seed < 40 || pair_instances < 25; ++seed) {
    REQUIRE(seed < 120);
    const Instance inst = make_instance(seed, 6, 5);
    const auto action = assign_distance_aware(inst.reachable, inst.cell);
    const auto best = best_pair_score(inst, spread_of);
    if (!best) {
      if (action) CHECK(action->n_assigned() <= 1);
      continue;
    }
    ++pair_instances;
    REQUIRE(action.has_value());
    REQUIRE(action->n_assigned() == 2);
    CHECK(spread_of(*action) == doctest::Approx(*best).epsilon(1e-12));
    CHECK(joint_action_feasible(inst.cell, *action));
  }
}

TEST_CASE("quality policy maximizes the quality sum") {
  int pair_instances = 0;
  for (std::uint64_t seed = 100; seed < 140 || pair_instances < 25; ++seed) {
    REQUIRE(seed < 220);
    const Instance inst = make_instance(seed, 6, 5);
    const auto action = assign_quality_aware(inst.reachable, inst.cell);
    const auto best = best_pair_score(inst, quality_of);
    if (!best) {
      if (action) CHECK(action->n_assigned() <= 1);
      continue;
    }
    ++pair_instances;
    REQUIRE(action.has_value());
    REQUIRE(action->n_assigned() == 2);
    CHECK(quality_of(*action) == doctest::Approx(*best).epsilon(1e-12));
    CHECK(joint_action_feasible(inst.cell, *action));
  }
}

TEST_CASE("policy_candidates deduplicates, caps, and filters bans") {
  for (PolicyName name : {PolicyName::kin_feasibility, PolicyName::distance_aware,
                          PolicyName::quality_aware, PolicyName::split_space,
                          PolicyName::sequential}) {
    const Instance inst = make_instance(7, 8, 8);
    PolicyKind policy;
    policy.kind = name;
    policy.sample_budget = 100;
    policy.rng_seed = 5;
    const auto candidates = policy_candidates(policy, inst.reachable, inst.cell, 0, 4);
    REQUIRE(!candidates.empty());
    CHECK(candidates.size() <= 4);
    std::set<std::uint64_t> keys;
    for (const JointAction& a : candidates) {
      CHECK(joint_action_feasible(inst.cell, a));
      CHECK(keys.insert(action_key(a)).second);  // no duplicates
    }
    // banning the front candidate removes exactly it
    GraspBlacklist banned{action_key(candidates.front())};
    const auto filtered =
        policy_candidates(policy, inst.reachable, inst.cell, 0, 4, &banned);
    for (const JointAction& a : filtered) CHECK(banned.count(action_key(a)) == 0);
  }

  // empty reachable sets yield no candidates
  const Instance inst = make_instance(7, 8, 8);
  const std::vector<std::vector<ReachableGrasp>> empty(2);
  PolicyKind policy;
  policy.kind = PolicyName::kin_feasibility;
  CHECK(policy_candidates(policy, empty, inst.cell, 0, 4).empty());
}

TEST_CASE("policy names round trip") {
  for (PolicyName k : {PolicyName::sequential, PolicyName::split_space,
                       PolicyName::kin_feasibility, PolicyName::distance_aware,
                       PolicyName::quality_aware})
    CHECK(policy_from_name(policy_name(k)) == k);
  CHECK_THROWS(policy_from_name("nonsense"));
}

}  // TEST_SUITE
