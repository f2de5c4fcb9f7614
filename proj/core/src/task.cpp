#include "binpick/task.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <unordered_set>

#include "binpick/rng.hpp"

namespace binpick {

int JointAction::n_assigned() const {
  int n = 0;
  for (const auto& a : assignments)
    if (a) ++n;
  return n;
}

std::set<int> JointAction::target_object_ids() const {
  std::set<int> ids;
  for (const auto& a : assignments)
    if (a) ids.insert(a->proposal.object_id);
  return ids;
}

namespace {

std::uint64_t quantize(double v, double step) {
  return static_cast<std::uint64_t>(
      static_cast<std::int64_t>(std::llround(v / step)) + (1ll << 32));
}

}  // namespace

std::uint64_t grasp_key(const GraspProposal& g) {
  return mix_seed(static_cast<std::uint64_t>(g.object_id),
                  quantize(g.pose.translation.x(), 1e-3),
                  quantize(g.pose.translation.y(), 1e-3),
                  quantize(g.pose.translation.z(), 1e-3),
                  quantize(g.approach_angle, 1e-2), quantize(g.quality, 1e-2));
}

std::uint64_t action_key(const JointAction& action) {
  std::uint64_t key = 0x7a3d;
  for (size_t r = 0; r < action.assignments.size(); ++r)
    if (action.assignments[r])
      key = mix_seed(key, static_cast<std::uint64_t>(r),
                     grasp_key(action.assignments[r]->proposal));
  return key;
}

namespace {

JointAction make_action(int n_robots) {
  JointAction action;
  action.assignments.resize(n_robots);
  return action;
}

void finalize_hint(JointAction& action) {
  action.order_hint =
      action.n_assigned() >= 2 ? OrderHint::simultaneous : OrderHint::sequential;
}

JointAction single_action(int n_robots, int robot, const ReachableGrasp& g) {
  JointAction action = make_action(n_robots);
  action.assignments[robot] = g;
  finalize_hint(action);
  return action;
}

bool all_empty(const std::vector<std::vector<ReachableGrasp>>& reachable) {
  return std::all_of(reachable.begin(), reachable.end(),
                     [](const auto& v) { return v.empty(); });
}

// Robots ordered by the quality of their best reachable grasp, best first.
std::vector<int> robots_by_best_quality(
    const std::vector<std::vector<ReachableGrasp>>& reachable) {
  std::vector<int> robots;
  for (size_t r = 0; r < reachable.size(); ++r)
    if (!reachable[r].empty()) robots.push_back(static_cast<int>(r));
  std::stable_sort(robots.begin(), robots.end(), [&](int a, int b) {
    return reachable[a][0].proposal.quality > reachable[b][0].proposal.quality;
  });
  return robots;
}

// Best screened single-robot action; falls back to the best unscreened one
// so a nonempty reachable set always yields an action.
std::optional<JointAction> best_single(
    const std::vector<std::vector<ReachableGrasp>>& reachable, const Workcell& cell) {
  const std::vector<int> robots = robots_by_best_quality(reachable);
  if (robots.empty()) return std::nullopt;
  for (int r : robots)
    for (const ReachableGrasp& g : reachable[r]) {
      JointAction action = single_action(cell.n_arms(), r, g);
      if (joint_action_feasible(cell, action)) return action;
    }
  return single_action(cell.n_arms(), robots[0], reachable[robots[0]][0]);
}

std::string action_signature(const JointAction& action) {
  std::string sig;
  for (size_t r = 0; r < action.assignments.size(); ++r) {
    if (!action.assignments[r]) continue;
    const GraspProposal& g = action.assignments[r]->proposal;
    sig += std::to_string(r) + ":" + std::to_string(g.object_id) + ":" +
           std::to_string(g.approach_angle) + ";";
  }
  return sig;
}

}  // namespace

bool joint_action_feasible(const Workcell& cell, const JointAction& action) {
  if (action.assignments.size() != static_cast<size_t>(cell.n_arms()))
    throw std::invalid_argument("joint_action_feasible: assignment/arm count mismatch");
  const std::set<int> ignore = action.target_object_ids();

  CompositeConfig at_grasp, at_pregrasp;
  for (int r = 0; r < cell.n_arms(); ++r) {
    const auto& a = action.assignments[r];
    at_grasp.push_back(a ? a->grasp_config : cell.arms[r].home);
    at_pregrasp.push_back(a ? a->pregrasp_config : cell.arms[r].home);
  }
  return !collision_check(cell, at_grasp, ignore) &&
         !collision_check(cell, at_pregrasp, ignore);
}

std::optional<JointAction> assign_sequential(
    const std::vector<std::vector<ReachableGrasp>>& reachable, int round_index,
    std::uint64_t seed) {
  std::vector<int> robots;
  for (size_t r = 0; r < reachable.size(); ++r)
    if (!reachable[r].empty()) robots.push_back(static_cast<int>(r));
  if (robots.empty()) return std::nullopt;

  auto rng = make_rng(mix_seed(seed, 0x5e9, static_cast<std::uint64_t>(round_index)));
  const int pick = uniform_int(rng, 0, static_cast<int>(robots.size()) - 1);
  const int r = robots[pick];
  return single_action(static_cast<int>(reachable.size()), r, reachable[r][0]);
}

std::optional<JointAction> assign_split_space(
    const std::vector<std::vector<ReachableGrasp>>& reachable, const Workcell& cell) {
  if (all_empty(reachable)) return std::nullopt;

  // A grasp belongs to the robot whose base is nearest; all proposals of one
  // object share a position, so ownership is disjoint by construction.
  auto owner = [&](const GraspProposal& g) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cell.n_arms(); ++r) {
      const double d = (g.pose.translation - cell.arms[r].base_pose.translation).norm();
      if (d < best_d - 1e-12) {
        best_d = d;
        best = r;
      }
    }
    return best;
  };

  JointAction action = make_action(cell.n_arms());
  for (int r = 0; r < cell.n_arms(); ++r)
    for (const ReachableGrasp& g : reachable[r])
      if (owner(g.proposal) == r) {
        action.assignments[r] = g;
        break;
      }
  finalize_hint(action);

  if (action.n_assigned() > 0 && joint_action_feasible(cell, action)) return action;

  // Owned picks clashed (or nobody owns anything it can reach): single-robot
  // fallback, preferring the owner with the best grasp quality.
  return best_single(reachable, cell);
}

std::optional<JointAction> assign_kin_feasibility(
    const std::vector<std::vector<ReachableGrasp>>& reachable, const Workcell& cell,
    int budget, std::uint64_t seed, const GraspBlacklist* banned) {
  if (all_empty(reachable)) return std::nullopt;

  std::vector<int> robots;
  std::set<int> objects;
  for (size_t r = 0; r < reachable.size(); ++r)
    if (!reachable[r].empty()) {
      robots.push_back(static_cast<int>(r));
      for (const ReachableGrasp& g : reachable[r]) objects.insert(g.proposal.object_id);
    }
  const int cap =
      std::min(static_cast<int>(robots.size()), static_cast<int>(objects.size()));

  // Try full-cardinality combinations first, then fewer robots, so a cell
  // where no four-way draw is feasible still pairs two or three robots
  // instead of collapsing to a single pick.
  auto rng = make_rng(mix_seed(seed, 0xfea5));
  std::unordered_set<std::string> seen;
  for (int want = cap; want >= 2; --want) {
    for (int draw = 0; draw < budget; ++draw) {
      std::vector<int> chosen = robots;
      for (size_t i = chosen.size() - 1; i > 0; --i)
        std::swap(chosen[i], chosen[uniform_int(rng, 0, static_cast<int>(i))]);
      chosen.resize(want);

      JointAction action = make_action(static_cast<int>(reachable.size()));
      std::set<int> taken;
      bool disjoint = true;
      for (int r : chosen) {
        const ReachableGrasp& g =
            reachable[r][uniform_int(rng, 0, static_cast<int>(reachable[r].size()) - 1)];
        if (!taken.insert(g.proposal.object_id).second) {
          disjoint = false;
          break;
        }
        action.assignments[r] = g;
      }
      if (!disjoint) continue;
      if (!seen.insert(action_signature(action)).second) continue;
      if (banned && banned->count(action_key(action))) continue;
      finalize_hint(action);
      if (joint_action_feasible(cell, action)) return action;
    }
  }
  return best_single(reachable, cell);
}

namespace {

// All object-disjoint two-robot pairs ranked best-first by the given score,
// trimmed to the `limit` highest-ranked kinematically feasible ones that are
// not banned.
std::vector<JointAction> ranked_pair_candidates(
    const std::vector<std::vector<ReachableGrasp>>& reachable, const Workcell& cell,
    const std::function<double(const ReachableGrasp&, const ReachableGrasp&)>& score,
    int limit, const GraspBlacklist* banned = nullptr) {
  if (cell.n_arms() != 2)
    throw std::invalid_argument("pairwise ranking policies support exactly two robots");
  std::vector<JointAction> out;
  if (all_empty(reachable) || limit <= 0) return out;

  struct Pair {
    int i, j;
    double score;
  };
  std::vector<Pair> pairs;
  for (size_t i = 0; i < reachable[0].size(); ++i)
    for (size_t j = 0; j < reachable[1].size(); ++j) {
      if (reachable[0][i].proposal.object_id == reachable[1][j].proposal.object_id)
        continue;
      pairs.push_back({static_cast<int>(i), static_cast<int>(j),
                       score(reachable[0][i], reachable[1][j])});
    }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return a.score > b.score;
  });

  for (const Pair& p : pairs) {
    if (static_cast<int>(out.size()) >= limit) break;
    JointAction action = make_action(2);
    action.assignments[0] = reachable[0][p.i];
    action.assignments[1] = reachable[1][p.j];
    if (banned && banned->count(action_key(action))) continue;
    finalize_hint(action);
    if (joint_action_feasible(cell, action)) out.push_back(std::move(action));
  }
  return out;
}

// Shared scaffold for the two exhaustive two-robot rankings.
std::optional<JointAction> ranked_pairs(
    const std::vector<std::vector<ReachableGrasp>>& reachable, const Workcell& cell,
    const std::function<double(const ReachableGrasp&, const ReachableGrasp&)>& score) {
  auto top = ranked_pair_candidates(reachable, cell, score, 1);
  if (!top.empty()) return top[0];
  return best_single(reachable, cell);
}

double spread_score(const ReachableGrasp& a, const ReachableGrasp& b) {
  return (a.proposal.pose.translation - b.proposal.pose.translation).norm();
}

double quality_score(const ReachableGrasp& a, const ReachableGrasp& b) {
  return a.proposal.quality + b.proposal.quality;
}

}  // namespace

std::optional<JointAction> assign_distance_aware(
    const std::vector<std::vector<ReachableGrasp>>& reachable, const Workcell& cell) {
  return ranked_pairs(reachable, cell, spread_score);
}

std::optional<JointAction> assign_quality_aware(
    const std::vector<std::vector<ReachableGrasp>>& reachable, const Workcell& cell) {
  return ranked_pairs(reachable, cell, quality_score);
}

std::vector<JointAction> policy_candidates(
    const PolicyKind& policy, const std::vector<std::vector<ReachableGrasp>>& reachable,
    const Workcell& cell, int round_index, int max_candidates,
    const GraspBlacklist* banned) {
  std::vector<JointAction> out;
  std::unordered_set<std::string> seen;
  auto push = [&](const std::optional<JointAction>& action) {
    if (!action || static_cast<int>(out.size()) >= max_candidates) return;
    if (banned && banned->count(action_key(*action))) return;
    if (seen.insert(action_signature(*action)).second) out.push_back(*action);
  };

  switch (policy.kind) {
    case PolicyName::sequential:
      push(assign_sequential(reachable, round_index, policy.rng_seed));
      break;
    case PolicyName::split_space:
      push(assign_split_space(reachable, cell));
      break;
    case PolicyName::kin_feasibility: {
      // Keep drawing so planner failures can fall through to the next
      // feasible combination.
      push(assign_kin_feasibility(reachable, cell, policy.sample_budget, policy.rng_seed,
                                  banned));
      for (int k = 1; k < 4 && static_cast<int>(out.size()) < max_candidates; ++k)
        push(assign_kin_feasibility(reachable, cell, policy.sample_budget,
                                    mix_seed(policy.rng_seed, 0xa17, k), banned));
      break;
    }
    // Runner-up pairs let a planner failure fall through to the next ranked
    // combination instead of collapsing the round to a single robot.
    case PolicyName::distance_aware:
      for (const JointAction& a :
           ranked_pair_candidates(reachable, cell, spread_score, max_candidates, banned))
        push(a);
      break;
    case PolicyName::quality_aware:
      for (const JointAction& a :
           ranked_pair_candidates(reachable, cell, quality_score, max_candidates, banned))
        push(a);
      break;
  }

  // Single-robot fallbacks in quality order, so a failed multi-robot plan
  // still lets the round progress.
  for (int r : robots_by_best_quality(reachable))
    for (const ReachableGrasp& g : reachable[r]) {
      if (static_cast<int>(out.size()) >= max_candidates) return out;
      JointAction action = single_action(cell.n_arms(), r, g);
      if (joint_action_feasible(cell, action)) push(action);
    }
  if (out.empty() && !all_empty(reachable)) push(best_single(reachable, cell));
  return out;
}

std::string policy_name(PolicyName k) {
  switch (k) {
    case PolicyName::sequential: return "sequential";
    case PolicyName::split_space: return "split_space";
    case PolicyName::kin_feasibility: return "kin_feasibility";
    case PolicyName::distance_aware: return "distance_aware";
    case PolicyName::quality_aware: return "quality_aware";
  }
  return "unknown";
}

PolicyName policy_from_name(const std::string& name) {
  if (name == "sequential") return PolicyName::sequential;
  if (name == "split_space") return PolicyName::split_space;
  if (name == "kin_feasibility") return PolicyName::kin_feasibility;
  if (name == "distance_aware") return PolicyName::distance_aware;
  if (name == "quality_aware") return PolicyName::quality_aware;
  throw std::invalid_argument("unknown policy: " + name);
}

}  // namespace binpick
