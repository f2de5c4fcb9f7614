#include "binpick/kinematics.hpp"

#include <cmath>

namespace binpick {

namespace {

Pose dh_transform(const DhParam& p, double theta) {
  Pose t;
  t.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(theta + p.theta_offset,
                                                    Eigen::Vector3d::UnitZ())) *
               Eigen::Quaterniond(Eigen::AngleAxisd(p.alpha, Eigen::Vector3d::UnitX()));
  const double ct = std::cos(theta + p.theta_offset);
  const double st = std::sin(theta + p.theta_offset);
  t.translation = Eigen::Vector3d(p.a * ct, p.a * st, p.d);
  return t;
}

}  // namespace

std::vector<Pose> link_frames(const SerialArm& arm, const JointConfig& q) {
  std::vector<Pose> frames;
  frames.reserve(arm.dof() + 1);
  frames.push_back(arm.base_pose);
  Pose cur = arm.base_pose;
  for (int i = 0; i < arm.dof(); ++i) {
    cur = cur * dh_transform(arm.dh[i], q[i]);
    frames.push_back(cur);
  }
  return frames;
}

Pose forward_kinematics(const SerialArm& arm, const JointConfig& q) {
  Pose cur = arm.base_pose;
  for (int i = 0; i < arm.dof(); ++i) cur = cur * dh_transform(arm.dh[i], q[i]);
  return cur * arm.tool_transform;
}

Eigen::MatrixXd geometric_jacobian(const SerialArm& arm, const JointConfig& q) {
  const std::vector<Pose> frames = link_frames(arm, q);
  const Eigen::Vector3d tcp = (frames.back() * arm.tool_transform).translation;
  Eigen::MatrixXd jac(6, arm.dof());
  for (int i = 0; i < arm.dof(); ++i) {
    // Joint i rotates about the z axis of frame i-1 (frames[i] here since
    // frames[0] is the base).
    const Eigen::Vector3d z = frames[i].rotation * Eigen::Vector3d::UnitZ();
    const Eigen::Vector3d p = frames[i].translation;
    jac.block<3, 1>(0, i) = z.cross(tcp - p);
    jac.block<3, 1>(3, i) = z;
  }
  return jac;
}

IkResult inverse_kinematics(const SerialArm& arm, const Pose& target, const JointConfig& seed) {
  constexpr int max_iters = 200;
  constexpr double lambda = 0.05;
  constexpr double step_clamp = 0.2;
  constexpr double pos_tol = 1e-4;
  constexpr double ori_tol = 1e-3;

  IkResult result;
  JointConfig q = arm.clamp_to_limits(seed);

  for (int iter = 0; iter < max_iters; ++iter) {
    const Pose tcp = forward_kinematics(arm, q);
    const Eigen::Vector3d pos_err = target.translation - tcp.translation;

    // Orientation error as the rotation vector of the residual rotation.
    const Eigen::Quaterniond dq = target.rotation * tcp.rotation.conjugate();
    Eigen::AngleAxisd aa(dq);
    double angle = aa.angle();
    if (angle > M_PI) angle -= 2.0 * M_PI;
    const Eigen::Vector3d ori_err = angle * aa.axis();

    result.iterations = iter;
    result.pos_error = pos_err.norm();
    result.ori_error = std::abs(angle);
    if (result.pos_error < pos_tol && result.ori_error < ori_tol) {
      result.status = IkStatus::ok;
      result.q = q;
      return result;
    }

    Eigen::Matrix<double, 6, 1> err;
    err << pos_err, ori_err;

    const Eigen::MatrixXd jac = geometric_jacobian(arm, q);
    const Eigen::MatrixXd jjt =
        jac * jac.transpose() + lambda * lambda * Eigen::MatrixXd::Identity(6, 6);
    Eigen::VectorXd dq_step = jac.transpose() * jjt.ldlt().solve(err);
    const double step_norm = dq_step.lpNorm<Eigen::Infinity>();
    if (step_norm > step_clamp) dq_step *= step_clamp / step_norm;

    q = arm.clamp_to_limits(q + dq_step);
  }

  // Did not converge: report whether the failure looks like a limit lock
  // (some joint pinned at a bound) or plain unreachability.
  result.q = q;
  const bool pinned = ((q.array() - arm.lower.array()).abs() < 1e-9 ||
                       (arm.upper.array() - q.array()).abs() < 1e-9)
                          .any();
  result.status = pinned ? IkStatus::limits : IkStatus::unreachable;
  return result;
}

}  // namespace binpick
