#include <doctest.h>

#include <cmath>

#include "binpick/kinematics.hpp"
#include "binpick/rng.hpp"
#include "binpick/workcell.hpp"
#include "test_util.hpp"

using namespace binpick;
using namespace binpick::testutil;

namespace {

const SerialArm& reference_arm() {
  static const Workcell cell = make_dual_arm_workcell();
  return cell.arms[0];
}

}  // namespace

TEST_SUITE("kinematics") {

TEST_CASE("link frames match the homogeneous-matrix oracle") {
  const SerialArm& arm = reference_arm();
  auto rng = make_rng(21);
  for (int i = 0; i < 300; ++i) {
    const JointConfig q = random_config(arm, rng);
    const std::vector<Pose> frames = link_frames(arm, q);
    REQUIRE(static_cast<int>(frames.size()) == arm.dof() + 1);
    for (int link = 0; link <= arm.dof(); ++link) {
      const Eigen::Matrix4d want = fk_oracle(arm, q, link);
      const Eigen::Matrix4d got = frames[link].matrix();
      CHECK((got - want).cwiseAbs().maxCoeff() < 1e-10);
    }
    const Eigen::Matrix4d tcp = tcp_oracle(arm, q);
    CHECK((forward_kinematics(arm, q).matrix() - tcp).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("base frame and zero-pose reach") {
  const SerialArm& arm = reference_arm();
  const std::vector<Pose> frames = link_frames(arm, JointConfig::Zero(arm.dof()));
  CHECK((frames[0].translation - arm.base_pose.translation).norm() < 1e-12);
  // At the zero configuration the chain plus tool extends 1.28 m from the
  // base (the sum of the link offsets and the tool length).
  const Pose tcp = forward_kinematics(arm, JointConfig::Zero(arm.dof()));
  CHECK((tcp.translation - arm.base_pose.translation).norm() == doctest::Approx(1.28));
}

TEST_CASE("jacobian matches finite differences") {
  const SerialArm& arm = reference_arm();
  auto rng = make_rng(22);
  const double h = 1e-7;
  for (int i = 0; i < 40; ++i) {
    const JointConfig q = random_config(arm, rng, 0.05);
    const Eigen::MatrixXd jac = geometric_jacobian(arm, q);
    REQUIRE(jac.rows() == 6);
    REQUIRE(jac.cols() == arm.dof());
    for (int j = 0; j < arm.dof(); ++j) {
      JointConfig qp = q, qm = q;
      qp[j] += h;
      qm[j] -= h;
      const Pose fp = forward_kinematics(arm, qp);
      const Pose fm = forward_kinematics(arm, qm);
      const Eigen::Vector3d dv = (fp.translation - fm.translation) / (2.0 * h);
      CHECK((jac.block<3, 1>(0, j) - dv).norm() < 1e-5);
      // angular velocity via the quaternion log of the relative rotation
      const Eigen::Quaterniond dq = fp.rotation * fm.rotation.conjugate();
      Eigen::AngleAxisd aa(dq);
      double angle = aa.angle();
      if (angle > M_PI) angle -= 2.0 * M_PI;
      const Eigen::Vector3d w = aa.axis() * (angle / (2.0 * h));
      CHECK((jac.block<3, 1>(3, j) - w).norm() < 1e-4);
    }
  }
}

TEST_CASE("inverse kinematics round trips sampled poses") {
  const SerialArm& arm = reference_arm();
  auto rng = make_rng(23);
  int solved = 0;
  for (int i = 0; i < 150; ++i) {
    const JointConfig q = random_config(arm, rng, 0.1);
    const Pose target = forward_kinematics(arm, q);
    JointConfig seed = q;
    for (int j = 0; j < arm.dof(); ++j) seed[j] += uniform_real(rng, -0.15, 0.15);
    seed = arm.clamp_to_limits(seed);
    const IkResult ik = inverse_kinematics(arm, target, seed);
    REQUIRE(ik.status == IkStatus::ok);
    CHECK(arm.within_limits(ik.q, 1e-9));
    const Pose reached = forward_kinematics(arm, ik.q);
    CHECK((reached.translation - target.translation).norm() < 1e-4);
    CHECK(reached.rotation.angularDistance(target.rotation) < 1e-3);
    ++solved;
  }
  CHECK(solved == 150);
}

TEST_CASE("inverse kinematics rejects unreachable targets") {
  const SerialArm& arm = reference_arm();
  const Pose far = Pose::from_translation(arm.base_pose.translation +
                                          Eigen::Vector3d(0.0, 0.0, 5.0));
  const IkResult ik = inverse_kinematics(arm, far, arm.home);
  CHECK(ik.status != IkStatus::ok);
}

TEST_CASE("limit helpers clamp and test consistently") {
  const SerialArm& arm = reference_arm();
  auto rng = make_rng(24);
  for (int i = 0; i < 100; ++i) {
    JointConfig q(arm.dof());
    for (int j = 0; j < arm.dof(); ++j) q[j] = uniform_real(rng, -6.0, 6.0);
    const JointConfig c = arm.clamp_to_limits(q);
    CHECK(arm.within_limits(c));
    if (arm.within_limits(q)) CHECK((q - c).norm() < 1e-12);
    for (int j = 0; j < arm.dof(); ++j) {
      CHECK(c[j] >= arm.lower[j]);
      CHECK(c[j] <= arm.upper[j]);
    }
  }
}

TEST_CASE("reference arm construction") {
  const SerialArm& arm = reference_arm();
  CHECK(arm.dof() == 7);
  CHECK(arm.home.size() == 7);
  CHECK(arm.drop.size() == 7);
  CHECK(arm.within_limits(arm.home));
  CHECK(arm.within_limits(arm.drop));
  CHECK(!arm.link_shapes.empty());
  for (const LinkShape& ls : arm.link_shapes) {
    CHECK(ls.link >= 0);
    CHECK(ls.link <= arm.dof());
  }
  // yaw mounts rotate the base frame about world z
  const SerialArm spun = make_reference_arm({1.0, 2.0, 0.0}, M_PI / 2.0);
  CHECK((spun.base_pose.translation - Eigen::Vector3d(1.0, 2.0, 0.0)).norm() < 1e-12);
  const Eigen::Vector3d x_world = spun.base_pose.rotation * Eigen::Vector3d::UnitX();
  CHECK((x_world - Eigen::Vector3d(0.0, 1.0, 0.0)).norm() < 1e-12);
}

}  // TEST_SUITE
