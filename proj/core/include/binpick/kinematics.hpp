#pragma once

#include <vector>

#include "binpick/geometry.hpp"

namespace binpick {

/// Classic Denavit-Hartenberg row: A_i = Rz(theta + theta_offset) Tz(d) Tx(a) Rx(alpha).
struct DhParam {
  double a = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
};

using JointConfig = Eigen::VectorXd;

/// Collision shape attached to a link frame. link 0 is the base frame,
/// link i (1-based) the frame after joint i.
struct LinkShape {
  int link = 0;
  CollisionShape shape;
};

struct SerialArm {
  Pose base_pose;
  std::vector<DhParam> dh;
  Eigen::VectorXd lower;   // joint limits, radians
  Eigen::VectorXd upper;
  std::vector<LinkShape> link_shapes;
  Pose tool_transform;     // TCP relative to the last joint frame
  JointConfig home;
  JointConfig drop;        // parking config for dropping outside the bin

  int dof() const { return static_cast<int>(dh.size()); }

  bool within_limits(const JointConfig& q, double tol = 0.0) const {
    return (q.array() >= lower.array() - tol).all() &&
           (q.array() <= upper.array() + tol).all();
  }

  JointConfig clamp_to_limits(const JointConfig& q) const {
    return q.cwiseMax(lower).cwiseMin(upper);
  }
};

/// World pose of every chain frame: result[0] = base_pose, result[i] the
/// frame after joint i. Size dof() + 1.
std::vector<Pose> link_frames(const SerialArm& arm, const JointConfig& q);

/// World TCP pose (last joint frame composed with tool_transform).
Pose forward_kinematics(const SerialArm& arm, const JointConfig& q);

enum class IkStatus { ok, unreachable, limits };

struct IkResult {
  IkStatus status = IkStatus::unreachable;
  JointConfig q;
  int iterations = 0;
  double pos_error = 0.0;
  double ori_error = 0.0;

  explicit operator bool() const { return status == IkStatus::ok; }
};

/// Damped-least-squares inverse kinematics on the geometric Jacobian.
/// Iterates from `seed`, clamping every iterate to the joint limits.
/// Converged when position error < 1e-4 m and orientation error < 1e-3 rad.
IkResult inverse_kinematics(const SerialArm& arm, const Pose& target, const JointConfig& seed);

/// 6 x dof geometric Jacobian (linear on top, angular below) at q, about the TCP.
Eigen::MatrixXd geometric_jacobian(const SerialArm& arm, const JointConfig& q);

}  // namespace binpick
