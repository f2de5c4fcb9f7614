#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "binpick/workcell.hpp"

namespace binpick {

enum class Placement { centred, excentred };

/// Object catalog: five primitive classes standing in for typical elongated
/// household/workshop items. Two instances of each fill a 10-object bin.
enum class ObjectClass : int {
  elongated_capsule = 0,
  small_box = 1,
  thin_box = 2,
  round_capsule = 3,
  flat_box = 4,
};

inline constexpr int kObjectClassCount = 5;

/// Grasp-quality prior per object class. Arbitrary constants that give the
/// quality-aware policy a nontrivial ordering.
double base_quality(ObjectClass klass);

struct ObjectInstance {
  int id = -1;
  ObjectClass klass = ObjectClass::small_box;
  CollisionShape shape;   // local_pose is identity; world placement in `pose`
  Pose pose;
  int layer = 0;          // discrete stacking layer, 0 = resting on the floor
  bool removed = false;
};

struct BinScene {
  std::vector<ObjectInstance> objects;
  Placement placement = Placement::centred;
  std::uint64_t rng_seed = 0;

  int live_count() const;
  const ObjectInstance* find(int id) const;
};

/// Candidate grasp: top-down TCP pose over one object.
struct GraspProposal {
  int object_id = -1;
  Pose pose;
  double quality = 0.0;        // in [0, 1]
  double width = 0.0;          // jaw opening, meters
  double approach_angle = 0.0; // roll of the closing line about world z
};

struct GraspMap {
  std::vector<GraspProposal> proposals;  // sorted by descending quality
  int per_object_count = 0;
};

/// Proposal bundled with the arm configuration that reaches it and the
/// matching pre-grasp configuration 0.10 m above.
struct ReachableGrasp {
  GraspProposal proposal;
  JointConfig grasp_config;
  JointConfig pregrasp_config;
};

inline constexpr double kPregraspHeight = 0.10;

Pose pregrasp_pose(const GraspProposal& g);

/// Deterministic clutter generator. Centred placement distributes object
/// centers symmetrically about the mid-axis between the robot bases (x = 0);
/// excentred shifts the distribution center 0.10 m off-axis. Overlapping
/// placements stack onto discrete height layers.
///
/// Throws std::runtime_error when placement retries are exhausted.
BinScene generate_scene(Placement placement, int n_objects, std::uint64_t seed);

/// Synthetic grasp oracle. Up to m top-down grasps per live object; quality
/// is the class prior discounted by the fraction of the object's top surface
/// covered by higher objects.
GraspMap propose_grasps(const BinScene& scene, int m, std::uint64_t seed);

/// Fraction of `id`'s top surface covered by live objects on higher layers.
double occlusion_fraction(const BinScene& scene, int id);

/// True iff `id` can retreat straight up by the pre-grasp height without
/// penetrating another live object. An object with a neighbour resting on it
/// is not retrievable until that neighbour is removed.
bool retrievable(const BinScene& scene, int id);

/// Proposals reachable by `arm`: inverse kinematics succeeds and the grasp
/// configuration is collision-free against statics and non-target objects.
/// Quality ordering of `map` is preserved.
std::vector<ReachableGrasp> reachable_grasps(const SerialArm& arm, const GraspMap& map,
                                             const Workcell& cell);

/// Copy of the scene with `id` marked removed. Throws on unknown id or
/// double removal.
BinScene remove_object(const BinScene& scene, int id);

/// Cell with the scene's live objects installed as movable obstacles.
Workcell with_objects(Workcell cell, const BinScene& scene);

std::string placement_name(Placement p);
Placement placement_from_name(const std::string& name);

}  // namespace binpick
