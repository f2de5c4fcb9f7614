#pragma once

// Shared helpers for the test suite. The oracles here are written against the
// public contracts only (DH definition, footprint geometry, plain 4x4 matrix
// algebra) so they stay independent of the library's internal formulations.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "binpick/rng.hpp"
#include "binpick/scene.hpp"
#include "binpick/workcell.hpp"

namespace binpick::testutil {

// Independent forward kinematics: classic DH as explicit homogeneous
// matrices, Rz(theta) * Tz(d) * Tx(a) * Rx(alpha), composed with plain 4x4
// products. The library composes quaternion poses instead, so agreement
// checks both the parameter interpretation and the rotation arithmetic.
inline Eigen::Matrix4d dh_matrix(const DhParam& p, double q) {
  const double ct = std::cos(q + p.theta_offset), st = std::sin(q + p.theta_offset);
  const double ca = std::cos(p.alpha), sa = std::sin(p.alpha);
  Eigen::Matrix4d rz = Eigen::Matrix4d::Identity();
  rz(0, 0) = ct; rz(0, 1) = -st; rz(1, 0) = st; rz(1, 1) = ct;
  Eigen::Matrix4d tz = Eigen::Matrix4d::Identity();
  tz(2, 3) = p.d;
  Eigen::Matrix4d tx = Eigen::Matrix4d::Identity();
  tx(0, 3) = p.a;
  Eigen::Matrix4d rx = Eigen::Matrix4d::Identity();
  rx(1, 1) = ca; rx(1, 2) = -sa; rx(2, 1) = sa; rx(2, 2) = ca;
  return rz * tz * tx * rx;
}

// World transform of chain frame `link` (0 = base, dof() = last joint frame).
inline Eigen::Matrix4d fk_oracle(const SerialArm& arm, const JointConfig& q, int link) {
  Eigen::Matrix4d t = arm.base_pose.matrix();
  for (int i = 0; i < link; ++i) t = t * dh_matrix(arm.dh[i], q[i]);
  return t;
}

inline Eigen::Matrix4d tcp_oracle(const SerialArm& arm, const JointConfig& q) {
  return fk_oracle(arm, q, arm.dof()) * arm.tool_transform.matrix();
}

inline JointConfig random_config(const SerialArm& arm, std::mt19937_64& rng,
                                 double limit_margin = 0.0) {
  JointConfig q(arm.dof());
  for (int i = 0; i < arm.dof(); ++i)
    q[i] = uniform_real(rng, arm.lower[i] + limit_margin, arm.upper[i] - limit_margin);
  return q;
}

inline CompositeConfig random_free_composite(const Workcell& cell, std::mt19937_64& rng,
                                             int max_tries = 2000) {
  for (int t = 0; t < max_tries; ++t) {
    CompositeConfig c;
    for (const SerialArm& arm : cell.arms) c.push_back(random_config(arm, rng));
    if (!collision_check(cell, c)) return c;
  }
  throw std::runtime_error("random_free_composite: no free sample found");
}

// 2D footprint of a placed object: vertical capsules project to discs,
// yaw-rotated boxes to rotated rectangles. Mirrors the scene's placement
// convention (top-down poses, yaw-only rotations).
struct Footprint {
  bool disc = false;
  double r = 0.0;        // disc radius
  double hx = 0.0, hy = 0.0, yaw = 0.0;  // rectangle
  double x = 0.0, y = 0.0;
};

inline Footprint footprint_of(const ObjectInstance& o) {
  Footprint f;
  f.x = o.pose.translation.x();
  f.y = o.pose.translation.y();
  if (o.shape.kind == ShapeKind::capsule || o.shape.kind == ShapeKind::sphere) {
    f.disc = true;
    f.r = o.shape.size.x();
  } else {
    f.hx = o.shape.size.x();
    f.hy = o.shape.size.y();
    const Eigen::Vector3d ex = o.pose.rotation * Eigen::Vector3d::UnitX();
    f.yaw = std::atan2(ex.y(), ex.x());
  }
  return f;
}

inline bool footprint_contains(const Footprint& f, double px, double py) {
  const double dx = px - f.x, dy = py - f.y;
  if (f.disc) return dx * dx + dy * dy <= f.r * f.r;
  const double c = std::cos(-f.yaw), s = std::sin(-f.yaw);
  const double lx = c * dx - s * dy, ly = s * dx + c * dy;
  return std::abs(lx) <= f.hx && std::abs(ly) <= f.hy;
}

inline std::vector<Eigen::Vector2d> rect_corners(const Footprint& f) {
  const double c = std::cos(f.yaw), s = std::sin(f.yaw);
  std::vector<Eigen::Vector2d> out;
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0})
      out.emplace_back(f.x + c * sx * f.hx - s * sy * f.hy,
                       f.y + s * sx * f.hx + c * sy * f.hy);
  std::swap(out[2], out[3]);  // counterclockwise order
  return out;
}

inline double seg_seg_2d(const Eigen::Vector2d& a0, const Eigen::Vector2d& a1,
                         const Eigen::Vector2d& b0, const Eigen::Vector2d& b1) {
  auto point_seg = [](const Eigen::Vector2d& p, const Eigen::Vector2d& s0,
                      const Eigen::Vector2d& s1) {
    const Eigen::Vector2d d = s1 - s0;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - s0).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (p - (s0 + t * d)).norm();
  };
  double best = std::min({point_seg(a0, b0, b1), point_seg(a1, b0, b1),
                          point_seg(b0, a0, a1), point_seg(b1, a0, a1)});
  // Proper crossings only matter for overlap, which callers detect separately.
  return best;
}

inline bool rects_overlap_sat(const Footprint& a, const Footprint& b) {
  const auto ca = rect_corners(a), cb = rect_corners(b);
  auto separated = [&](double axis_yaw) {
    const Eigen::Vector2d axis(std::cos(axis_yaw), std::sin(axis_yaw));
    auto range = [&](const std::vector<Eigen::Vector2d>& pts) {
      double lo = 1e300, hi = -1e300;
      for (const auto& p : pts) {
        const double v = axis.dot(p);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      return std::pair<double, double>{lo, hi};
    };
    const auto [alo, ahi] = range(ca);
    const auto [blo, bhi] = range(cb);
    return ahi < blo || bhi < alo;
  };
  for (double yaw : {a.yaw, a.yaw + M_PI / 2.0, b.yaw, b.yaw + M_PI / 2.0})
    if (separated(yaw)) return false;
  return true;
}

// Signed-by-classification lateral gap: exact positive distances for disjoint
// footprints, -1 for overlapping ones (the tests only use the sign and the
// disjoint value).
inline double footprint_gap(const Footprint& a, const Footprint& b) {
  if (a.disc && b.disc)
    return std::hypot(a.x - b.x, a.y - b.y) - a.r - b.r;
  if (a.disc != b.disc) {
    const Footprint& d = a.disc ? a : b;
    const Footprint& r = a.disc ? b : a;
    const double c = std::cos(-r.yaw), s = std::sin(-r.yaw);
    const double dx = d.x - r.x, dy = d.y - r.y;
    const double lx = c * dx - s * dy, ly = s * dx + c * dy;
    const double ox = std::max(std::abs(lx) - r.hx, 0.0);
    const double oy = std::max(std::abs(ly) - r.hy, 0.0);
    const double dist = std::hypot(ox, oy);
    if (dist <= 0.0) return -1.0;  // center inside the rectangle
    return dist - d.r;
  }
  if (rects_overlap_sat(a, b)) return -1.0;
  const auto ca = rect_corners(a), cb = rect_corners(b);
  double best = 1e300;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      best = std::min(best, seg_seg_2d(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4]));
  return best;
}

inline double footprint_gap(const ObjectInstance& a, const ObjectInstance& b) {
  return footprint_gap(footprint_of(a), footprint_of(b));
}

}  // namespace binpick::testutil
