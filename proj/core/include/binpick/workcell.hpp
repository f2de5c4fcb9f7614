#pragma once

#include <set>
#include <vector>

#include "binpick/kinematics.hpp"

namespace binpick {

/// Movable obstacle with a stable id (a scene object projected into the cell).
struct ObjectObstacle {
  int id = -1;
  CollisionShape shape;
  Pose pose;
};

/// Multi-robot cell: arms, static geometry (table, bin walls), the bin
/// region, and the current movable objects.
struct Workcell {
  std::vector<SerialArm> arms;
  std::vector<CollisionShape> static_shapes;  // local_pose is the world pose
  Aabb bin_region;
  std::vector<ObjectObstacle> objects;

  int n_arms() const { return static_cast<int>(arms.size()); }
};

using CompositeConfig = std::vector<JointConfig>;

/// Distance below which two shapes count as colliding. Absorbs
/// path-discretization error.
inline constexpr double kClearanceMargin = 0.005;

CompositeConfig home_composite(const Workcell& cell);

/// True iff any checked pair is closer than `margin`: arm self-collision
/// (shapes non-adjacent along the chain), arm-arm, arm-static, or arm-object
/// for objects whose id is not in ignore_objects.
bool collision_check(const Workcell& cell, const CompositeConfig& c,
                     const std::set<int>& ignore_objects = {},
                     double margin = kClearanceMargin);

/// Minimum signed distance over all pairs collision_check would test.
double min_separation(const Workcell& cell, const CompositeConfig& c,
                      const std::set<int>& ignore_objects = {});

/// Minimum signed distance between the link shapes of two arms.
double arm_pair_distance(const Workcell& cell, const CompositeConfig& c,
                         int arm_a, int arm_b);

/// Collision test for one arm in isolation: self, statics, and objects.
/// Other arms are not considered.
bool single_arm_collision(const Workcell& cell, int arm_index, const JointConfig& q,
                          const std::set<int>& ignore_objects = {},
                          double margin = kClearanceMargin);

/// 7-dof reference arm (1.28 m reach, capsule links of radius 0.06 m)
/// mounted at `base`. `yaw` spins the mount about world z.
SerialArm make_reference_arm(const Eigen::Vector3d& base, double yaw);

/// Two reference arms 1 m apart on the x axis, bin at the origin.
Workcell make_dual_arm_workcell();

/// Four reference arms at the corners of a 1 m square, bin at the origin.
Workcell make_four_arm_workcell();

}  // namespace binpick
