#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "binpick/scene.hpp"

namespace binpick {

enum class OrderHint { simultaneous, sequential };

/// One coarse-level solution: per robot either a reachable grasp or idle.
/// No two robots are ever assigned grasps on the same object.
struct JointAction {
  std::vector<std::optional<ReachableGrasp>> assignments;
  OrderHint order_hint = OrderHint::sequential;

  int n_assigned() const;
  std::set<int> target_object_ids() const;
};

/// Grasps and robot-grasp combinations that failed to plan, lift, or execute
/// are excluded from later rounds. Grasp keys cover object, pose, and quality
/// so a retry is allowed once occlusion changes; a failed multi-robot
/// candidate bans the combination, not its member grasps.
using GraspBlacklist = std::set<std::uint64_t>;

std::uint64_t grasp_key(const GraspProposal& g);

/// Key for a whole robot-grasp combination, sharing the blacklist's key
/// space with single grasps.
std::uint64_t action_key(const JointAction& action);

/// Ranking cost of a candidate action; feasible actions compare before
/// infeasible ones regardless of value.
struct TaskCost {
  double value = 0.0;
  bool feasible = false;

  bool better_than(const TaskCost& other) const {
    if (feasible != other.feasible) return feasible;
    return value > other.value;
  }
};

enum class PolicyName {
  sequential,
  split_space,
  kin_feasibility,
  distance_aware,
  quality_aware,
};

struct PolicyKind {
  PolicyName kind = PolicyName::kin_feasibility;
  int sample_budget = 200;  // kin_feasibility draw budget
  std::uint64_t rng_seed = 0;
};

/// Static feasibility screen used by every policy: unassigned robots at
/// home, assigned robots at their grasp configs, then again at the pre-grasp
/// configs. Targeted objects are ignored in the collision check.
bool joint_action_feasible(const Workcell& cell, const JointAction& action);

/// One robot picks, chosen uniformly at random (seeded) among robots with a
/// nonempty reachable set; it gets its highest-quality grasp.
std::optional<JointAction> assign_sequential(
    const std::vector<std::vector<ReachableGrasp>>& reachable, int round_index,
    std::uint64_t seed);

/// Voronoi split: each grasp belongs to the robot with the nearest base
/// (ties to the lower index); each robot takes its best owned grasp. If the
/// owners' joint configuration collides, falls back to a single-robot pick.
std::optional<JointAction> assign_split_space(
    const std::vector<std::vector<ReachableGrasp>>& reachable, const Workcell& cell);

/// Samples up to `budget` distinct object-disjoint combinations from the
/// product of reachable sets and returns the first that passes the joint
/// feasibility screen; falls back to a single-robot pick. Combinations in
/// `banned` are skipped.
std::optional<JointAction> assign_kin_feasibility(
    const std::vector<std::vector<ReachableGrasp>>& reachable, const Workcell& cell,
    int budget, std::uint64_t seed, const GraspBlacklist* banned = nullptr);

/// Full enumeration ranked by descending pairwise grasp-distance sum, first
/// feasible wins. Two-robot setting only.
std::optional<JointAction> assign_distance_aware(
    const std::vector<std::vector<ReachableGrasp>>& reachable, const Workcell& cell);

/// Full enumeration ranked by descending quality sum, first feasible wins.
/// Two-robot setting only.
std::optional<JointAction> assign_quality_aware(
    const std::vector<std::vector<ReachableGrasp>>& reachable, const Workcell& cell);

/// Ranked candidate actions for one round: the policy's choices first, then
/// single-robot fallbacks, deduplicated. Used by the pipeline to retry the
/// next-best action when fine-level planning fails. Combinations whose key
/// is in `banned` are never emitted, so the policy's next-best unbanned
/// choice surfaces instead. Empty iff every reachable set is empty.
std::vector<JointAction> policy_candidates(
    const PolicyKind& policy, const std::vector<std::vector<ReachableGrasp>>& reachable,
    const Workcell& cell, int round_index, int max_candidates,
    const GraspBlacklist* banned = nullptr);

std::string policy_name(PolicyName k);
PolicyName policy_from_name(const std::string& name);

}  // namespace binpick
