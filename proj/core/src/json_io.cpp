#include "binpick/json_io.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace binpick {

namespace {

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vecx(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vecx_from(const json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

json composite(const CompositeConfig& c) {
  json arr = json::array();
  for (const JointConfig& q : c) arr.push_back(vecx(q));
  return arr;
}

CompositeConfig composite_from(const json& j) {
  CompositeConfig c;
  for (const auto& q : j) c.push_back(vecx_from(q));
  return c;
}

template <typename Enum>
std::string lookup_name(Enum v, const std::vector<std::pair<Enum, std::string>>& table) {
  for (const auto& [k, name] : table)
    if (k == v) return name;
  throw std::invalid_argument("unknown enum value");
}

template <typename Enum>
Enum lookup_enum(const std::string& name,
                 const std::vector<std::pair<Enum, std::string>>& table) {
  for (const auto& [k, n] : table)
    if (n == name) return k;
  throw std::invalid_argument("unknown name: " + name);
}

const std::vector<std::pair<ShapeKind, std::string>> kShapeKinds = {
    {ShapeKind::capsule, "capsule"},
    {ShapeKind::sphere, "sphere"},
    {ShapeKind::box, "box"},
};

const std::vector<std::pair<ObjectClass, std::string>> kObjectClasses = {
    {ObjectClass::elongated_capsule, "elongated_capsule"},
    {ObjectClass::small_box, "small_box"},
    {ObjectClass::thin_box, "thin_box"},
    {ObjectClass::round_capsule, "round_capsule"},
    {ObjectClass::flat_box, "flat_box"},
};

const std::vector<std::pair<PlanningMode, std::string>> kPlanningModes = {
    {PlanningMode::composite, "composite"},
    {PlanningMode::prioritized, "prioritized"},
};

const std::vector<std::pair<SuccessModel, std::string>> kSuccessModels = {
    {SuccessModel::deterministic, "deterministic"},
    {SuccessModel::stochastic, "stochastic"},
};

const std::vector<std::pair<OrderHint, std::string>> kOrderHints = {
    {OrderHint::simultaneous, "simultaneous"},
    {OrderHint::sequential, "sequential"},
};

}  // namespace

void to_json(json& j, const Pose& p) {
  j = {{"rotation", json::array({p.rotation.w(), p.rotation.x(), p.rotation.y(),
                                 p.rotation.z()})},
       {"translation", vec3(p.translation)}};
}

void from_json(const json& j, Pose& p) {
  const json& r = j.at("rotation");
  if (!r.is_array() || r.size() != 4)
    throw std::invalid_argument("pose rotation must be [w, x, y, z]");
  p = Pose(Eigen::Quaterniond(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                              r[3].get<double>()),
           vec3_from(j.at("translation")));
}

void to_json(json& j, const Aabb& a) { j = {{"lo", vec3(a.lo)}, {"hi", vec3(a.hi)}}; }

void from_json(const json& j, Aabb& a) {
  a.lo = vec3_from(j.at("lo"));
  a.hi = vec3_from(j.at("hi"));
}

void to_json(json& j, const CollisionShape& s) {
  j = {{"kind", lookup_name(s.kind, kShapeKinds)},
       {"size", vec3(s.size)},
       {"pose", s.local_pose}};
}

void from_json(const json& j, CollisionShape& s) {
  s.kind = lookup_enum<ShapeKind>(j.at("kind").get<std::string>(), kShapeKinds);
  s.size = vec3_from(j.at("size"));
  s.local_pose = j.value("pose", Pose{});
}

void to_json(json& j, const SerialArm& a) {
  json dh = json::array();
  for (const DhParam& p : a.dh)
    dh.push_back({{"a", p.a},
                  {"alpha", p.alpha},
                  {"d", p.d},
                  {"theta_offset", p.theta_offset}});
  json shapes = json::array();
  for (const LinkShape& ls : a.link_shapes)
    shapes.push_back({{"link", ls.link}, {"shape", ls.shape}});
  j = {{"base_pose", a.base_pose}, {"dh", dh},
       {"lower", vecx(a.lower)},   {"upper", vecx(a.upper)},
       {"link_shapes", shapes},    {"tool_transform", a.tool_transform},
       {"home", vecx(a.home)},     {"drop", vecx(a.drop)}};
}

void from_json(const json& j, SerialArm& a) {
  a = SerialArm{};
  a.base_pose = j.at("base_pose").get<Pose>();
  for (const auto& row : j.at("dh")) {
    DhParam p;
    p.a = row.value("a", 0.0);
    p.alpha = row.value("alpha", 0.0);
    p.d = row.value("d", 0.0);
    p.theta_offset = row.value("theta_offset", 0.0);
    a.dh.push_back(p);
  }
  a.lower = vecx_from(j.at("lower"));
  a.upper = vecx_from(j.at("upper"));
  if (a.lower.size() != a.dof() || a.upper.size() != a.dof())
    throw std::invalid_argument("arm: limit sizes must match dof");
  for (const auto& row : j.at("link_shapes")) {
    LinkShape ls;
    ls.link = row.at("link").get<int>();
    ls.shape = row.at("shape").get<CollisionShape>();
    a.link_shapes.push_back(ls);
  }
  a.tool_transform = j.value("tool_transform", Pose{});
  a.home = j.contains("home") ? vecx_from(j.at("home"))
                              : Eigen::VectorXd::Zero(a.dof()).eval();
  a.drop = j.contains("drop") ? vecx_from(j.at("drop"))
                              : Eigen::VectorXd::Zero(a.dof()).eval();
}

void to_json(json& j, const Workcell& w) {
  json objects = json::array();
  for (const ObjectObstacle& o : w.objects)
    objects.push_back({{"id", o.id}, {"shape", o.shape}, {"pose", o.pose}});
  j = {{"arms", w.arms},
       {"static_shapes", w.static_shapes},
       {"bin_region", w.bin_region},
       {"objects", objects}};
}

void from_json(const json& j, Workcell& w) {
  w = Workcell{};
  w.arms = j.at("arms").get<std::vector<SerialArm>>();
  w.static_shapes = j.value("static_shapes", std::vector<CollisionShape>{});
  w.bin_region = j.value("bin_region", Aabb{});
  for (const auto& row : j.value("objects", json::array())) {
    ObjectObstacle o;
    o.id = row.at("id").get<int>();
    o.shape = row.at("shape").get<CollisionShape>();
    o.pose = row.at("pose").get<Pose>();
    w.objects.push_back(o);
  }
}

void to_json(json& j, const ObjectInstance& o) {
  j = {{"id", o.id},
       {"class", lookup_name(o.klass, kObjectClasses)},
       {"shape", o.shape},
       {"pose", o.pose},
       {"layer", o.layer},
       {"removed", o.removed}};
}

void from_json(const json& j, ObjectInstance& o) {
  o.id = j.at("id").get<int>();
  o.klass = lookup_enum<ObjectClass>(j.at("class").get<std::string>(), kObjectClasses);
  o.shape = j.at("shape").get<CollisionShape>();
  o.pose = j.at("pose").get<Pose>();
  o.layer = j.value("layer", 0);
  o.removed = j.value("removed", false);
}

void to_json(json& j, const BinScene& s) {
  j = {{"objects", s.objects},
       {"placement", placement_name(s.placement)},
       {"rng_seed", s.rng_seed}};
}

void from_json(const json& j, BinScene& s) {
  s.objects = j.at("objects").get<std::vector<ObjectInstance>>();
  s.placement = placement_from_name(j.value("placement", "centred"));
  s.rng_seed = j.value("rng_seed", std::uint64_t{0});
}

void to_json(json& j, const GraspProposal& g) {
  j = {{"object_id", g.object_id},
       {"pose", g.pose},
       {"quality", g.quality},
       {"width", g.width},
       {"approach_angle", g.approach_angle}};
}

void from_json(const json& j, GraspProposal& g) {
  g.object_id = j.at("object_id").get<int>();
  g.pose = j.at("pose").get<Pose>();
  g.quality = j.at("quality").get<double>();
  g.width = j.value("width", 0.0);
  g.approach_angle = j.value("approach_angle", 0.0);
}

void to_json(json& j, const GraspMap& m) {
  j = {{"proposals", m.proposals}, {"per_object_count", m.per_object_count}};
}

void from_json(const json& j, GraspMap& m) {
  m.proposals = j.at("proposals").get<std::vector<GraspProposal>>();
  m.per_object_count = j.value("per_object_count", 0);
}

void to_json(json& j, const PathPlan& p) {
  json waypoints = json::array();
  for (const CompositeConfig& c : p.waypoints) waypoints.push_back(composite(c));
  j = {{"waypoints", waypoints}, {"timestamps", p.timestamps}, {"cost", p.cost}};
}

void from_json(const json& j, PathPlan& p) {
  p.waypoints.clear();
  for (const auto& c : j.at("waypoints")) p.waypoints.push_back(composite_from(c));
  p.timestamps = j.at("timestamps").get<std::vector<double>>();
  p.cost = j.value("cost", 0.0);
}

void to_json(json& j, const PlannerConfig& c) {
  j = {{"planner", planner_name(c.kind)},
       {"step_size", c.step_size},
       {"goal_bias", c.goal_bias},
       {"batch_size", c.batch_size},
       {"time_budget_ms", c.time_budget_ms},
       {"rng_seed", c.rng_seed},
       {"rewire_radius_scale", c.rewire_radius_scale}};
}

void from_json(const json& j, PlannerConfig& c) {
  const PlannerConfig defaults;
  c.kind = j.contains("planner") ? planner_from_name(j.at("planner").get<std::string>())
                                 : defaults.kind;
  c.step_size = j.value("step_size", defaults.step_size);
  c.goal_bias = j.value("goal_bias", defaults.goal_bias);
  c.batch_size = j.value("batch_size", defaults.batch_size);
  c.time_budget_ms = j.value("time_budget_ms", defaults.time_budget_ms);
  c.rng_seed = j.value("rng_seed", defaults.rng_seed);
  c.rewire_radius_scale = j.value("rewire_radius_scale", defaults.rewire_radius_scale);
}

void to_json(json& j, const PolicyKind& p) {
  j = {{"policy", policy_name(p.kind)},
       {"sample_budget", p.sample_budget},
       {"rng_seed", p.rng_seed}};
}

void from_json(const json& j, PolicyKind& p) {
  const PolicyKind defaults;
  p.kind = j.contains("policy") ? policy_from_name(j.at("policy").get<std::string>())
                                : defaults.kind;
  p.sample_budget = j.value("sample_budget", defaults.sample_budget);
  p.rng_seed = j.value("rng_seed", defaults.rng_seed);
}

void to_json(json& j, const JointAction& a) {
  json assignments = json::array();
  for (const auto& g : a.assignments) {
    if (!g) {
      assignments.push_back(nullptr);
      continue;
    }
    assignments.push_back({{"proposal", g->proposal},
                           {"grasp_config", vecx(g->grasp_config)},
                           {"pregrasp_config", vecx(g->pregrasp_config)}});
  }
  j = {{"assignments", assignments},
       {"order_hint", lookup_name(a.order_hint, kOrderHints)}};
}

void to_json(json& j, const GraspRound& r) {
  j = {{"index", r.index},
       {"action", r.action},
       {"to_grasp", r.to_grasp},
       {"to_drop", r.to_drop},
       {"rewards", r.rewards},
       {"picks", r.picks()},
       {"robots_used", r.robots_used()},
       {"task_ms", r.task_ms},
       {"motion_ms", r.motion_ms},
       {"total_ms", r.total_ms},
       {"aborted", r.aborted}};
}

void to_json(json& j, const EpisodeLog& log) {
  json histogram = json::object();
  for (const auto& [n, count] : log.robots_used_histogram)
    histogram[std::to_string(n)] = count;
  j = {{"rounds", log.rounds},
       {"initial_scene", log.initial_scene},
       {"cleared", log.cleared},
       {"total_picks", log.total_picks},
       {"robots_used_histogram", histogram}};
}

void to_json(json& j, const ScenarioSpec& s) {
  j = {{"name", s.name},
       {"n_robots", s.n_robots},
       {"placement", placement_name(s.placement)},
       {"n_bins", s.n_bins},
       {"objects_per_bin", s.objects_per_bin},
       {"trials", s.trials},
       {"policy", s.policy},
       {"planner", s.planner},
       {"planning_mode", lookup_name(s.planning_mode, kPlanningModes)},
       {"success_model", lookup_name(s.success_model, kSuccessModels)},
       {"base_seed", s.base_seed},
       {"max_rounds", s.max_rounds},
       {"p1_retry_limit", s.p1_retry_limit},
       {"grasps_per_object", s.grasps_per_object}};
}

void from_json(const json& j, ScenarioSpec& s) {
  const ScenarioSpec defaults;
  s.name = j.at("name").get<std::string>();
  s.n_robots = j.value("n_robots", defaults.n_robots);
  s.placement = placement_from_name(j.value("placement", "centred"));
  s.n_bins = j.value("n_bins", defaults.n_bins);
  s.objects_per_bin = j.value("objects_per_bin", defaults.objects_per_bin);
  s.trials = j.value("trials", defaults.trials);
  s.policy = j.value("policy", defaults.policy);
  s.planner = j.value("planner", defaults.planner);
  s.planning_mode = lookup_enum<PlanningMode>(j.value("planning_mode", "composite"),
                                              kPlanningModes);
  s.success_model = lookup_enum<SuccessModel>(j.value("success_model", "deterministic"),
                                              kSuccessModels);
  s.base_seed = j.value("base_seed", defaults.base_seed);
  s.max_rounds = j.value("max_rounds", defaults.max_rounds);
  s.p1_retry_limit = j.value("p1_retry_limit", defaults.p1_retry_limit);
  s.grasps_per_object = j.value("grasps_per_object", defaults.grasps_per_object);
}

void to_json(json& j, const ScenarioSummary& s) {
  json histogram = json::object();
  for (const auto& [n, count] : s.robots_used_histogram)
    histogram[std::to_string(n)] = count;
  j = {{"scenario", s.scenario},
       {"episodes", s.episodes},
       {"total_rounds", s.total_rounds},
       {"total_picks", s.total_picks},
       {"cleared_episodes", s.cleared_episodes},
       {"aborted_episodes", s.aborted_episodes},
       {"robots_used_histogram", histogram},
       {"mean_cumulative_picks", s.mean_cumulative_picks},
       {"ci95_halfwidth", s.ci95_halfwidth},
       {"median_task_ms", s.median_task_ms},
       {"median_motion_ms", s.median_motion_ms}};
}

std::string episode_to_jsonl(const EpisodeLog& log) {
  std::string out;
  for (const GraspRound& r : log.rounds) {
    json j = r;
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

}  // namespace

Workcell load_workcell(const std::string& path) {
  return parse_file(path).get<Workcell>();
}

std::vector<ScenarioSpec> load_scenario_specs(const std::string& path) {
  const json j = parse_file(path);
  std::vector<ScenarioSpec> specs;
  if (j.is_array())
    for (const auto& item : j) specs.push_back(item.get<ScenarioSpec>());
  else
    specs.push_back(j.get<ScenarioSpec>());
  for (const ScenarioSpec& s : specs) s.validate();
  return specs;
}

ScenarioSpec load_scenario_spec(const std::string& path) {
  const std::vector<ScenarioSpec> specs = load_scenario_specs(path);
  if (specs.size() != 1)
    throw std::runtime_error(path + ": expected exactly one scenario spec");
  return specs.front();
}

}  // namespace binpick
