#include "binpick/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "binpick/rng.hpp"

namespace binpick {

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

CompositeConfig action_configs(const Workcell& cell, const JointAction& action,
                               bool pregrasp) {
  CompositeConfig c;
  for (int r = 0; r < cell.n_arms(); ++r) {
    const auto& a = action.assignments[r];
    if (a)
      c.push_back(pregrasp ? a->pregrasp_config : a->grasp_config);
    else
      c.push_back(cell.arms[r].home);
  }
  return c;
}

std::set<int> assigned_robots(const JointAction& action) {
  std::set<int> robots;
  for (size_t r = 0; r < action.assignments.size(); ++r)
    if (action.assignments[r]) robots.insert(static_cast<int>(r));
  return robots;
}

// The straight retreat from grasp to pre-grasp configs, carrying the
// objects. Not planned, so it is checked explicitly. Margin is a micron shy
// of zero: the held object starts in resting contact (floor or the pile
// below), and the retreat may slide along that contact, so exact touching
// must not read as penetration while any real overlap still does.
constexpr double kLiftSlack = 1e-6;

bool lift_clear(const Workcell& attached, const JointAction& action) {
  const CompositeConfig from = action_configs(attached, action, false);
  const CompositeConfig to = action_configs(attached, action, true);
  double delta = 0.0;
  for (size_t r = 0; r < from.size(); ++r)
    delta = std::max(delta, (to[r] - from[r]).lpNorm<Eigen::Infinity>());
  const int n = std::max(1, static_cast<int>(std::ceil(delta / kCheckResolution)));
  for (int i = 0; i <= n; ++i) {
    const double s = static_cast<double>(i) / n;
    CompositeConfig c = from;
    for (size_t r = 0; r < c.size(); ++r) c[r] = from[r] + s * (to[r] - from[r]);
    if (collision_check(attached, c, {}, -kLiftSlack)) return false;
  }
  return true;
}

PlanResult plan_with_retry(const PlanningProblem& problem, PlannerConfig planner,
                           PlanningMode mode, std::uint64_t seed) {
  planner.rng_seed = seed;
  PlanResult result = mode == PlanningMode::composite
                          ? plan(problem, planner)
                          : plan_prioritized(problem, planner, {});
  if (result) return result;
  planner.rng_seed = mix_seed(seed, 0x2e7);
  PlanResult retry = mode == PlanningMode::composite
                         ? plan(problem, planner)
                         : plan_prioritized(problem, planner, {});
  retry.evals_used += result.evals_used;
  retry.total_ms += result.total_ms;
  return retry;
}

}  // namespace

int GraspRound::picks() const {
  int n = 0;
  for (int r : rewards) n += r;
  return n;
}

int GraspRound::robots_used() const { return action.n_assigned(); }


Workcell attach_grasped_objects(const Workcell& cell, const BinScene& scene,
                                const JointAction& action) {
  Workcell attached = cell;
  const std::set<int> targets = action.target_object_ids();

  attached.objects.clear();
  for (const ObjectObstacle& o : cell.objects)
    if (!targets.count(o.id)) attached.objects.push_back(o);

  for (size_t r = 0; r < action.assignments.size(); ++r) {
    const auto& a = action.assignments[r];
    if (!a) continue;
    const ObjectInstance* obj = scene.find(a->proposal.object_id);
    if (!obj || obj->removed)
      throw std::invalid_argument("attach_grasped_objects: target not live in scene");
    SerialArm& arm = attached.arms[r];
    const std::vector<Pose> frames = link_frames(arm, a->grasp_config);
    CollisionShape held = obj->shape;
    held.local_pose = frames[arm.dof()].inverse() * obj->pose;
    arm.link_shapes.push_back({arm.dof(), held});
  }
  return attached;
}

RoundOutcome run_round(const BinScene& scene, const Workcell& cell,
                       const PipelineConfig& cfg, int k, GraspBlacklist* blacklist) {
  Stopwatch round_clock;
  RoundOutcome outcome;
  outcome.scene = scene;
  GraspRound& round = outcome.round;
  round.index = k;
  round.rewards.assign(cell.n_arms(), 0);

  // Coarse level: propose, filter, and rank candidate assignments. The
  // proposal seed is round-independent so a grasp keeps its identity across
  // rounds; otherwise the blacklist could never suppress a blocked grasp.
  Stopwatch task_clock;
  GraspMap map = propose_grasps(scene, cfg.grasps_per_object,
                                mix_seed(cfg.rng_seed, 0x6a5b));
  {
    // An object with a neighbour resting on it cannot retreat straight up,
    // so none of its grasps are candidates until the neighbour is removed.
    std::map<int, bool> liftable;
    std::vector<GraspProposal> kept;
    for (const GraspProposal& g : map.proposals) {
      if (blacklist && blacklist->count(grasp_key(g))) continue;
      auto it = liftable.find(g.object_id);
      if (it == liftable.end())
        it = liftable.emplace(g.object_id, retrievable(scene, g.object_id)).first;
      if (it->second) kept.push_back(g);
    }
    map.proposals = std::move(kept);
  }

  const Workcell cell_objs = with_objects(cell, scene);
  std::vector<std::vector<ReachableGrasp>> reachable;
  for (const SerialArm& arm : cell_objs.arms)
    reachable.push_back(reachable_grasps(arm, map, cell_objs));

  PolicyKind policy = cfg.policy;
  policy.rng_seed = mix_seed(cfg.rng_seed, 0x901c, k);
  const std::vector<JointAction> candidates = policy_candidates(
      policy, reachable, cell_objs, k, cfg.p1_retry_limit + 1, blacklist);
  round.task_ms = task_clock.ms();

  if (candidates.empty()) {
    round.aborted = true;
    round.total_ms = round_clock.ms();
    return outcome;
  }

  // Fine level: plan the candidates in rank order until one works.
  Stopwatch motion_clock;
  bool planned = false;
  Workcell attached;
  for (size_t attempt = 0; attempt < candidates.size() && !planned; ++attempt) {
    const JointAction& action = candidates[attempt];
    const std::set<int> targets = action.target_object_ids();
    const std::set<int> active = assigned_robots(action);

    // A candidate that cannot be planned or lifted is excluded like a failed
    // execution, or a greedy policy would re-propose the same blocked grasp
    // every round. A single-robot failure blames its one grasp; a multi-robot
    // failure only proves the combination bad. The grasp key covers quality,
    // so once a blocker is gone the changed occlusion re-admits the grasp.
    const auto reject = [&] {
      if (!blacklist) return;
      if (action.n_assigned() == 1) {
        for (const auto& a : action.assignments)
          if (a) blacklist->insert(grasp_key(a->proposal));
      } else {
        blacklist->insert(action_key(action));
      }
    };

    PlanningProblem to_grasp;
    to_grasp.cell = cell_objs;
    to_grasp.start = home_composite(cell_objs);
    to_grasp.goal = action_configs(cell_objs, action, false);
    to_grasp.ignore_objects = targets;
    to_grasp.active_robots = active;
    PlanResult grasp_plan = plan_with_retry(
        to_grasp, cfg.planner, cfg.planning_mode,
        mix_seed(cfg.rng_seed, 0x90a5, k, attempt, 0));
    if (!grasp_plan) {
      reject();
      continue;
    }

    Workcell carry = attach_grasped_objects(cell_objs, scene, action);
    if (!lift_clear(carry, action)) {
      // Solo re-checks pin a blocked lift on specific grasps, e.g. an object
      // pinned under a neighbour's corner, no matter which partner it was
      // paired with.
      if (blacklist && action.n_assigned() > 1) {
        for (size_t r = 0; r < action.assignments.size(); ++r) {
          if (!action.assignments[r]) continue;
          JointAction solo;
          solo.assignments.assign(action.assignments.size(), std::nullopt);
          solo.assignments[r] = action.assignments[r];
          const Workcell solo_carry = attach_grasped_objects(cell_objs, scene, solo);
          if (!lift_clear(solo_carry, solo))
            blacklist->insert(grasp_key(action.assignments[r]->proposal));
        }
      }
      reject();
      continue;
    }

    PlanningProblem to_drop;
    to_drop.cell = carry;
    to_drop.start = action_configs(carry, action, true);
    to_drop.goal = to_drop.start;
    for (int r : active) to_drop.goal[r] = carry.arms[r].drop;
    to_drop.active_robots = active;
    PlanResult drop_plan = plan_with_retry(
        to_drop, cfg.planner, cfg.planning_mode,
        mix_seed(cfg.rng_seed, 0x90a5, k, attempt, 1));
    if (!drop_plan) {
      reject();
      continue;
    }

    round.action = action;
    round.to_grasp = std::move(grasp_plan.plan);
    round.to_drop = std::move(drop_plan.plan);
    attached = std::move(carry);
    planned = true;
  }
  round.motion_ms = motion_clock.ms();

  if (planned) {
    round.rewards = execute(round.to_grasp, round.to_drop, round.action, scene, cell, cfg, k);
    for (size_t r = 0; r < round.action.assignments.size(); ++r) {
      const auto& a = round.action.assignments[r];
      if (!a) continue;
      if (round.rewards[r]) {
        outcome.scene = remove_object(outcome.scene, a->proposal.object_id);
      } else if (blacklist && cfg.success_model == SuccessModel::deterministic) {
        blacklist->insert(grasp_key(a->proposal));
      }
    }
  }

  round.total_ms = round_clock.ms();
  return outcome;
}

std::vector<int> execute(const PathPlan& to_grasp, const PathPlan& to_drop,
                         const JointAction& action, const BinScene& scene,
                         const Workcell& cell, const PipelineConfig& cfg, int k) {
  const int n = cell.n_arms();
  if (action.assignments.size() != static_cast<size_t>(n))
    throw std::invalid_argument("execute: assignment/arm count mismatch");

  // Robots the action leaves idle must not move in either path.
  auto moved = [&](const PathPlan& p, int r) {
    for (const CompositeConfig& c : p.waypoints)
      if ((c[r] - p.waypoints.front()[r]).lpNorm<Eigen::Infinity>() > 1e-9) return true;
    return false;
  };
  for (int r = 0; r < n; ++r) {
    if (action.assignments[r]) continue;
    if ((!to_grasp.empty() && moved(to_grasp, r)) || (!to_drop.empty() && moved(to_drop, r)))
      throw std::invalid_argument("execute: idle robot moves in a path");
  }

  const Workcell cell_objs = with_objects(cell, scene);
  const Workcell attached = attach_grasped_objects(cell_objs, scene, action);
  std::vector<int> rewards(n, 0);
  if (!validate_path(to_grasp, cell_objs, action.target_object_ids())) return rewards;
  if (!validate_path(to_drop, attached, {})) return rewards;

  for (int r = 0; r < n; ++r) {
    const auto& a = action.assignments[r];
    if (!a) continue;
    if (cfg.success_model == SuccessModel::deterministic) {
      rewards[r] = a->proposal.quality >= kSuccessQuality ? 1 : 0;
    } else {
      auto rng = make_rng(mix_seed(cfg.rng_seed, 0x50cc, k, r));
      rewards[r] = uniform_real(rng, 0.0, 1.0) < a->proposal.quality ? 1 : 0;
    }
  }
  return rewards;
}

EpisodeLog run_episode(const BinScene& scene, const Workcell& cell,
                       const PipelineConfig& cfg) {
  EpisodeLog log;
  log.initial_scene = scene;
  BinScene cur = scene;
  GraspBlacklist blacklist;

  for (int k = 0; k < cfg.max_rounds; ++k) {
    RoundOutcome outcome = run_round(cur, cell, cfg, k, &blacklist);
    const bool aborted = outcome.round.aborted;
    log.total_picks += outcome.round.picks();
    if (!aborted) ++log.robots_used_histogram[outcome.round.robots_used()];
    log.rounds.push_back(std::move(outcome.round));
    cur = std::move(outcome.scene);
    if (aborted) break;
    if (cur.live_count() == 0) {
      log.cleared = true;
      break;
    }
  }
  return log;
}

}  // namespace binpick
