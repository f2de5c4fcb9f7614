#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace binpick {

/// Rigid transform in 3-D: unit quaternion rotation plus translation.
struct Pose {
  Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d translation{0.0, 0.0, 0.0};

  Pose() = default;
  Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t)
      : rotation(q.normalized()), translation(t) {}

  static Pose identity() { return Pose(); }

  static Pose from_translation(const Eigen::Vector3d& t) {
    return Pose(Eigen::Quaterniond::Identity(), t);
  }

  static Pose from_axis_angle(const Eigen::Vector3d& axis, double angle,
                              const Eigen::Vector3d& t = Eigen::Vector3d::Zero()) {
    return Pose(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())), t);
  }

  Pose operator*(const Pose& other) const {
    return Pose(rotation * other.rotation, translation + rotation * other.translation);
  }

  Pose inverse() const {
    Eigen::Quaterniond qi = rotation.conjugate();
    return Pose(qi, qi * (-translation));
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation.toRotationMatrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }
};

/// Axis-aligned box, used for the bin region.
struct Aabb {
  Eigen::Vector3d lo{0.0, 0.0, 0.0};
  Eigen::Vector3d hi{0.0, 0.0, 0.0};

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  Eigen::Vector3d center() const { return 0.5 * (lo + hi); }
};

enum class ShapeKind { capsule, sphere, box };

/// Convex primitive with a pose relative to its owning frame.
///
/// size encoding: capsule (radius, half_length, 0) with the segment along
/// local z; sphere (radius, 0, 0); box (hx, hy, hz) half-extents.
struct CollisionShape {
  ShapeKind kind = ShapeKind::sphere;
  Eigen::Vector3d size{0.01, 0.0, 0.0};
  Pose local_pose;

  static CollisionShape make_capsule(double radius, double half_length,
                                     const Pose& local = Pose()) {
    return CollisionShape{ShapeKind::capsule, {radius, half_length, 0.0}, local};
  }
  static CollisionShape make_sphere(double radius, const Pose& local = Pose()) {
    return CollisionShape{ShapeKind::sphere, {radius, 0.0, 0.0}, local};
  }
  static CollisionShape make_box(const Eigen::Vector3d& half_extents,
                                 const Pose& local = Pose()) {
    return CollisionShape{ShapeKind::box, half_extents, local};
  }

  /// Radius of a sphere centered at local_pose.translation that encloses the shape.
  double bounding_radius() const {
    switch (kind) {
      case ShapeKind::capsule: return size.x() + size.y();
      case ShapeKind::sphere: return size.x();
      case ShapeKind::box: return size.norm();
    }
    return 0.0;
  }
};

/// Signed distance between two posed shapes: positive separation, <= 0 on
/// contact or penetration. Symmetric in its arguments.
///
/// frame_a/frame_b are the owning frames; the shape's local_pose is applied
/// on top. Box-box pairs use separating axes, so vertex-vertex gaps can be
/// underestimated (conservative for collision checking).
double shape_distance(const CollisionShape& a, const Pose& frame_a,
                      const CollisionShape& b, const Pose& frame_b);

/// World-frame axis-aligned bounds of a posed shape.
Aabb shape_world_aabb(const CollisionShape& shape, const Pose& frame);

/// Lower bound on the distance between two AABBs (0 if overlapping).
double aabb_gap(const Aabb& a, const Aabb& b);

/// Exact closest distance between two 3-D segments.
double segment_segment_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                                const Eigen::Vector3d& q0, const Eigen::Vector3d& q1);

/// Signed distance from a point to a box of given half-extents, in box frame.
double point_box_signed_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& half);

}  // namespace binpick
