#include "binpick/workcell.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace binpick {

namespace {

struct WorldShape {
  const CollisionShape* shape = nullptr;
  Pose frame;  // composed with shape->local_pose inside shape_distance
  Aabb aabb;
};

WorldShape posed(const CollisionShape& s, const Pose& frame) {
  return {&s, frame, shape_world_aabb(s, frame)};
}

std::vector<WorldShape> arm_world_shapes(const SerialArm& arm, const JointConfig& q) {
  const std::vector<Pose> frames = link_frames(arm, q);
  std::vector<WorldShape> out;
  out.reserve(arm.link_shapes.size());
  for (const LinkShape& ls : arm.link_shapes) out.push_back(posed(ls.shape, frames[ls.link]));
  return out;
}

double pair_distance(const WorldShape& a, const WorldShape& b) {
  return shape_distance(*a.shape, a.frame, *b.shape, b.frame);
}

// Visits every pair collision_check tests. visit returns false to stop early.
template <typename Visit>
void for_each_pair(const Workcell& cell, const CompositeConfig& c,
                   const std::set<int>& ignore_objects, Visit&& visit) {
  std::vector<std::vector<WorldShape>> arms;
  arms.reserve(cell.arms.size());
  for (size_t i = 0; i < cell.arms.size(); ++i)
    arms.push_back(arm_world_shapes(cell.arms[i], c[i]));

  std::vector<WorldShape> statics;
  statics.reserve(cell.static_shapes.size());
  for (const CollisionShape& s : cell.static_shapes) statics.push_back(posed(s, Pose::identity()));

  std::vector<WorldShape> objects;
  objects.reserve(cell.objects.size());
  for (const ObjectObstacle& o : cell.objects)
    if (!ignore_objects.count(o.id)) objects.push_back(posed(o.shape, o.pose));

  // Self pairs: shapes adjacent along the chain touch at the joint origins,
  // so only pairs at chain distance >= 2 are meaningful.
  for (const auto& shapes : arms)
    for (size_t i = 0; i + 2 < shapes.size(); ++i)
      for (size_t j = i + 2; j < shapes.size(); ++j)
        if (!visit(shapes[i], shapes[j])) return;

  for (size_t a = 0; a < arms.size(); ++a)
    for (size_t b = a + 1; b < arms.size(); ++b)
      for (const WorldShape& wa : arms[a])
        for (const WorldShape& wb : arms[b])
          if (!visit(wa, wb)) return;

  for (const auto& shapes : arms)
    for (const WorldShape& wa : shapes) {
      for (const WorldShape& ws : statics)
        if (!visit(wa, ws)) return;
      for (const WorldShape& wo : objects)
        if (!visit(wa, wo)) return;
    }
}

}  // namespace

CompositeConfig home_composite(const Workcell& cell) {
  CompositeConfig c;
  c.reserve(cell.arms.size());
  for (const SerialArm& arm : cell.arms) c.push_back(arm.home);
  return c;
}

bool collision_check(const Workcell& cell, const CompositeConfig& c,
                     const std::set<int>& ignore_objects, double margin) {
  if (c.size() != cell.arms.size())
    throw std::invalid_argument("collision_check: config/arm count mismatch");
  bool hit = false;
  for_each_pair(cell, c, ignore_objects, [&](const WorldShape& a, const WorldShape& b) {
    // The box gap lower-bounds the pair distance only while the boxes are
    // disjoint; overlapping boxes (gap 0) say nothing about penetration.
    const double gap = aabb_gap(a.aabb, b.aabb);
    if (gap > 0.0 && gap >= margin) return true;
    if (pair_distance(a, b) < margin) {
      hit = true;
      return false;
    }
    return true;
  });
  return hit;
}

double min_separation(const Workcell& cell, const CompositeConfig& c,
                      const std::set<int>& ignore_objects) {
  double best = std::numeric_limits<double>::infinity();
  for_each_pair(cell, c, ignore_objects, [&](const WorldShape& a, const WorldShape& b) {
    const double gap = aabb_gap(a.aabb, b.aabb);
    if (gap <= 0.0 || gap < best) best = std::min(best, pair_distance(a, b));
    return true;
  });
  return best;
}

double arm_pair_distance(const Workcell& cell, const CompositeConfig& c,
                         int arm_a, int arm_b) {
  const auto sa = arm_world_shapes(cell.arms[arm_a], c[arm_a]);
  const auto sb = arm_world_shapes(cell.arms[arm_b], c[arm_b]);
  double best = std::numeric_limits<double>::infinity();
  for (const WorldShape& a : sa)
    for (const WorldShape& b : sb)
      if (aabb_gap(a.aabb, b.aabb) < best) best = std::min(best, pair_distance(a, b));
  return best;
}

bool single_arm_collision(const Workcell& cell, int arm_index, const JointConfig& q,
                          const std::set<int>& ignore_objects, double margin) {
  const auto shapes = arm_world_shapes(cell.arms[arm_index], q);

  for (size_t i = 0; i + 2 < shapes.size(); ++i)
    for (size_t j = i + 2; j < shapes.size(); ++j)
      if (aabb_gap(shapes[i].aabb, shapes[j].aabb) < margin &&
          pair_distance(shapes[i], shapes[j]) < margin)
        return true;

  for (const WorldShape& wa : shapes) {
    for (const CollisionShape& s : cell.static_shapes) {
      const WorldShape ws = posed(s, Pose::identity());
      if (aabb_gap(wa.aabb, ws.aabb) < margin && pair_distance(wa, ws) < margin) return true;
    }
    for (const ObjectObstacle& o : cell.objects) {
      if (ignore_objects.count(o.id)) continue;
      const WorldShape wo = posed(o.shape, o.pose);
      if (aabb_gap(wa.aabb, wo.aabb) < margin && pair_distance(wa, wo) < margin) return true;
    }
  }
  return false;
}

namespace {

// Down-facing TCP orientation whose x axis points along the arm's mount
// heading (yaw about world z).
Eigen::Quaterniond down_facing(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Eigen::Matrix3d r;
  r.col(0) = Eigen::Vector3d(c, s, 0);
  r.col(1) = Eigen::Vector3d(s, -c, 0);
  r.col(2) = Eigen::Vector3d(0, 0, -1);
  return Eigen::Quaterniond(r);
}

JointConfig solve_posture(const SerialArm& arm, const Pose& target, const char* what) {
  const double seeds[][7] = {
      {0, 0.5, 0, 1.0, 0, 0.5, 0},   {0, 0.5, 0, -1.0, 0, 0.5, 0},
      {0, -0.5, 0, 1.0, 0, -0.5, 0}, {0, 0.8, 0, 1.4, 0, -0.8, 0},
      {0.3, 0.6, -0.3, 1.1, 0.2, 0.7, 0},
  };
  for (const auto& s : seeds) {
    JointConfig seed = Eigen::Map<const Eigen::VectorXd>(s, 7);
    if (IkResult r = inverse_kinematics(arm, target, seed)) return r.q;
  }
  throw std::runtime_error(std::string("reference arm: no IK solution for ") + what);
}

}  // namespace

SerialArm make_reference_arm(const Eigen::Vector3d& base, double yaw) {
  SerialArm arm;
  arm.base_pose = Pose::from_axis_angle(Eigen::Vector3d::UnitZ(), yaw);
  arm.base_pose.translation = base;

  const double d[7] = {0.30, 0, 0.40, 0, 0.36, 0, 0.12};
  const double alpha[7] = {-M_PI_2, M_PI_2, M_PI_2, -M_PI_2, -M_PI_2, M_PI_2, 0};
  arm.dh.resize(7);
  for (int i = 0; i < 7; ++i) arm.dh[i] = {0.0, alpha[i], d[i], 0.0};

  arm.lower.resize(7);
  arm.upper.resize(7);
  for (int i = 0; i < 7; ++i) {
    const double lim = (i % 2 == 0) ? 2.9 : 2.0;
    arm.lower[i] = -lim;
    arm.upper[i] = lim;
  }
  // The elbow folds further than the other pitch joints so the arm can pick
  // right at the near edge of its own bin half: a down-facing grasp 0.315 m
  // from the shoulder column needs about 2.3 rad of fold with these links.
  arm.lower[3] = -2.5;
  arm.upper[3] = 2.5;

  // Capsules along the links that carry length; the in-between rows are pure
  // reorientations. Each spans from the previous joint origin (constant in
  // the link frame because a = 0) to this one.
  constexpr double link_radius = 0.06;
  for (int link : {1, 3, 5, 7}) {
    const DhParam& p = arm.dh[link - 1];
    const Eigen::Vector3d prev(0.0, -p.d * std::sin(p.alpha), -p.d * std::cos(p.alpha));
    CollisionShape cap = CollisionShape::make_capsule(link_radius, p.d / 2.0);
    cap.local_pose.translation = prev / 2.0;
    cap.local_pose.rotation =
        Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), -prev);
    arm.link_shapes.push_back({link, cap});
  }

  // Slim gripper body hanging from the flange toward the TCP. The last 2 cm
  // before the TCP (the finger opening) carries no collision body so the
  // fingers can close around an object without flagging it.
  CollisionShape gripper = CollisionShape::make_capsule(0.015, 0.04);
  gripper.local_pose.translation = Eigen::Vector3d(0, 0, 0.04);
  arm.link_shapes.push_back({7, gripper});

  arm.tool_transform = Pose::from_translation(Eigen::Vector3d(0, 0, 0.10));

  Pose home_target;
  home_target.rotation = down_facing(yaw);
  home_target.translation = arm.base_pose.apply(Eigen::Vector3d(0.35, 0, 0.45));
  arm.home = solve_posture(arm, home_target, "home");

  Pose drop_target;
  drop_target.rotation = down_facing(yaw);
  drop_target.translation = arm.base_pose.apply(Eigen::Vector3d(0.05, -0.45, 0.35));
  arm.drop = solve_posture(arm, drop_target, "drop");

  return arm;
}

namespace {

Workcell make_cell(std::vector<SerialArm> arms) {
  Workcell cell;
  cell.arms = std::move(arms);
  cell.bin_region = {Eigen::Vector3d(-0.25, -0.20, 0.0), Eigen::Vector3d(0.25, 0.20, 0.22)};

  auto wall = [](double cx, double cy, double hx, double hy) {
    CollisionShape s = CollisionShape::make_box(Eigen::Vector3d(hx, hy, 0.075));
    s.local_pose.translation = Eigen::Vector3d(cx, cy, 0.075);
    return s;
  };
  cell.static_shapes.push_back(wall(0.255, 0.0, 0.005, 0.21));
  cell.static_shapes.push_back(wall(-0.255, 0.0, 0.005, 0.21));
  cell.static_shapes.push_back(wall(0.0, 0.205, 0.26, 0.005));
  cell.static_shapes.push_back(wall(0.0, -0.205, 0.26, 0.005));

  CollisionShape floor = CollisionShape::make_box(Eigen::Vector3d(0.26, 0.21, 0.01));
  floor.local_pose.translation = Eigen::Vector3d(0, 0, -0.01);
  cell.static_shapes.push_back(floor);
  return cell;
}

}  // namespace

Workcell make_dual_arm_workcell() {
  std::vector<SerialArm> arms;
  arms.push_back(make_reference_arm(Eigen::Vector3d(-0.5, 0, 0), 0.0));
  arms.push_back(make_reference_arm(Eigen::Vector3d(0.5, 0, 0), M_PI));
  return make_cell(std::move(arms));
}

Workcell make_four_arm_workcell() {
  std::vector<SerialArm> arms;
  const double c[4][2] = {{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
  for (const auto& corner : c) {
    const double yaw = std::atan2(-corner[1], -corner[0]);
    arms.push_back(make_reference_arm(Eigen::Vector3d(corner[0], corner[1], 0), yaw));
  }
  return make_cell(std::move(arms));
}

}  // namespace binpick
