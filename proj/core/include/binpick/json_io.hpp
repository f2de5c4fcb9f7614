#pragma once

#include <nlohmann/json_fwd.hpp>

#include "binpick/bench.hpp"

// JSON (de)serialization for every externally visible type. Schemas are
// documented in the top-level README.
namespace binpick {

using nlohmann::json;

void to_json(json& j, const Pose& p);
void from_json(const json& j, Pose& p);

void to_json(json& j, const Aabb& a);
void from_json(const json& j, Aabb& a);

void to_json(json& j, const CollisionShape& s);
void from_json(const json& j, CollisionShape& s);

void to_json(json& j, const SerialArm& a);
void from_json(const json& j, SerialArm& a);

void to_json(json& j, const Workcell& w);
void from_json(const json& j, Workcell& w);

void to_json(json& j, const ObjectInstance& o);
void from_json(const json& j, ObjectInstance& o);

void to_json(json& j, const BinScene& s);
void from_json(const json& j, BinScene& s);

void to_json(json& j, const GraspProposal& g);
void from_json(const json& j, GraspProposal& g);

void to_json(json& j, const GraspMap& m);
void from_json(const json& j, GraspMap& m);

void to_json(json& j, const PathPlan& p);
void from_json(const json& j, PathPlan& p);

void to_json(json& j, const PlannerConfig& c);
void from_json(const json& j, PlannerConfig& c);

void to_json(json& j, const PolicyKind& p);
void from_json(const json& j, PolicyKind& p);

void to_json(json& j, const JointAction& a);

void to_json(json& j, const GraspRound& r);

void to_json(json& j, const EpisodeLog& log);

void to_json(json& j, const ScenarioSpec& s);
void from_json(const json& j, ScenarioSpec& s);

void to_json(json& j, const ScenarioSummary& s);

/// One JSON object per line, one line per round.
std::string episode_to_jsonl(const EpisodeLog& log);

Workcell load_workcell(const std::string& path);
ScenarioSpec load_scenario_spec(const std::string& path);
std::vector<ScenarioSpec> load_scenario_specs(const std::string& path);

}  // namespace binpick
