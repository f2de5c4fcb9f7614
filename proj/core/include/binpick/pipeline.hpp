#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "binpick/motion.hpp"
#include "binpick/task.hpp"

namespace binpick {

enum class PlanningMode { composite, prioritized };
enum class SuccessModel { deterministic, stochastic };

/// One-round-lookahead pick loop configuration. The coarse level proposes a
/// robot-grasp assignment, the fine level plans the matching motion; on
/// failure the next-best assignment is tried.
struct PipelineConfig {
  PolicyKind policy;
  PlannerConfig planner;
  PlanningMode planning_mode = PlanningMode::composite;
  int max_rounds = 64;
  int p1_retry_limit = 3;
  SuccessModel success_model = SuccessModel::deterministic;
  std::uint64_t rng_seed = 0;
  int grasps_per_object = 5;
};

/// Deterministic success threshold: a grasp of quality >= 0.5 lifts the object.
inline constexpr double kSuccessQuality = 0.5;

struct GraspRound {
  int index = 0;
  JointAction action;
  PathPlan to_grasp;
  PathPlan to_drop;
  std::vector<int> rewards;  // per robot, 1 iff that robot lifted an object
  double task_ms = 0.0;      // coarse level incl. grasp filtering/screening
  double motion_ms = 0.0;    // fine level
  double total_ms = 0.0;
  bool aborted = false;      // no reachable grasp for any robot

  int picks() const;
  int robots_used() const;
};

struct EpisodeLog {
  std::vector<GraspRound> rounds;
  BinScene initial_scene;
  bool cleared = false;
  int total_picks = 0;
  std::map<int, int> robots_used_histogram;  // simultaneous-robot-count -> rounds
};

struct RoundOutcome {
  GraspRound round;
  BinScene scene;  // objects removed per the rewards
};

/// One grasp round: propose grasps, filter reachable, pick an assignment,
/// plan to-grasp and to-drop motions (retrying next-best assignments up to
/// p1_retry_limit), execute, and collect rewards.
RoundOutcome run_round(const BinScene& scene, const Workcell& cell,
                       const PipelineConfig& cfg, int k,
                       GraspBlacklist* blacklist = nullptr);

/// Validate both timed paths (to-drop with grasped objects attached to the
/// grippers) and assign rewards per the success model. Throws when the
/// action's assigned robots differ from the paths' active robots.
std::vector<int> execute(const PathPlan& to_grasp, const PathPlan& to_drop,
                         const JointAction& action, const BinScene& scene,
                         const Workcell& cell, const PipelineConfig& cfg, int k);

/// Rounds until the bin is cleared, a round aborts, or max_rounds is hit.
EpisodeLog run_episode(const BinScene& scene, const Workcell& cell,
                       const PipelineConfig& cfg);

/// Cell whose arms carry the grasped objects as attached end-effector
/// shapes, with those objects dropped from the obstacle set.
Workcell attach_grasped_objects(const Workcell& cell, const BinScene& scene,
                                const JointAction& action);

}  // namespace binpick
