#include "binpick/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace binpick {

namespace {

struct Segment {
  Eigen::Vector3d a;
  Eigen::Vector3d b;
};

Segment capsule_segment(const CollisionShape& cap, const Pose& frame) {
  const Pose world = frame * cap.local_pose;
  const Eigen::Vector3d axis = world.rotation * Eigen::Vector3d::UnitZ();
  const double hl = cap.size.y();
  return {world.translation - hl * axis, world.translation + hl * axis};
}

double point_segment_distance(const Eigen::Vector3d& p, const Segment& s) {
  const Eigen::Vector3d d = s.b - s.a;
  const double len2 = d.squaredNorm();
  if (len2 < 1e-18) return (p - s.a).norm();
  const double t = std::clamp((p - s.a).dot(d) / len2, 0.0, 1.0);
  return (p - (s.a + t * d)).norm();
}

// Signed distance from a world point to a posed box.
double point_box_world(const Eigen::Vector3d& p, const CollisionShape& box, const Pose& frame) {
  const Pose world = frame * box.local_pose;
  const Eigen::Vector3d local = world.rotation.conjugate() * (p - world.translation);
  return point_box_signed_distance(local, box.size);
}

// The signed distance of a convex body is convex along a line, so the
// minimum over the segment is found by ternary search.
double segment_box_signed(const Segment& s, const CollisionShape& box, const Pose& frame) {
  double lo = 0.0, hi = 1.0;
  const Eigen::Vector3d d = s.b - s.a;
  for (int i = 0; i < 64; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    const double f1 = point_box_world(s.a + m1 * d, box, frame);
    const double f2 = point_box_world(s.a + m2 * d, box, frame);
    if (f1 < f2)
      hi = m2;
    else
      lo = m1;
  }
  const double t = 0.5 * (lo + hi);
  double best = point_box_world(s.a + t * d, box, frame);
  best = std::min(best, point_box_world(s.a, box, frame));
  best = std::min(best, point_box_world(s.b, box, frame));
  return best;
}

// Separating-axis distance between two posed boxes: max over the 15
// candidate axes of the projected gap. Negative = penetration depth along
// the least-overlapping axis.
double box_box_signed(const CollisionShape& a, const Pose& fa,
                      const CollisionShape& b, const Pose& fb) {
  const Pose wa = fa * a.local_pose;
  const Pose wb = fb * b.local_pose;
  const Eigen::Matrix3d ra = wa.rotation.toRotationMatrix();
  const Eigen::Matrix3d rb = wb.rotation.toRotationMatrix();
  const Eigen::Vector3d delta = wb.translation - wa.translation;

  std::array<Eigen::Vector3d, 15> axes;
  int n_axes = 0;
  for (int i = 0; i < 3; ++i) axes[n_axes++] = ra.col(i);
  for (int i = 0; i < 3; ++i) axes[n_axes++] = rb.col(i);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d c = ra.col(i).cross(rb.col(j));
      const double n = c.norm();
      if (n > 1e-9) axes[n_axes++] = c / n;
    }

  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_axes; ++i) {
    const Eigen::Vector3d& axis = axes[i];
    const double proj_a = a.size.dot((ra.transpose() * axis).cwiseAbs());
    const double proj_b = b.size.dot((rb.transpose() * axis).cwiseAbs());
    const double gap = std::abs(delta.dot(axis)) - proj_a - proj_b;
    best = std::max(best, gap);
  }
  return best;
}

double dispatch(const CollisionShape& a, const Pose& fa,
                const CollisionShape& b, const Pose& fb) {
  switch (a.kind) {
    case ShapeKind::sphere:
      switch (b.kind) {
        case ShapeKind::sphere: {
          const Pose wa = fa * a.local_pose;
          const Pose wb = fb * b.local_pose;
          return (wa.translation - wb.translation).norm() - a.size.x() - b.size.x();
        }
        case ShapeKind::capsule: {
          const Pose wa = fa * a.local_pose;
          return point_segment_distance(wa.translation, capsule_segment(b, fb)) -
                 a.size.x() - b.size.x();
        }
        case ShapeKind::box: {
          const Pose wa = fa * a.local_pose;
          return point_box_world(wa.translation, b, fb) - a.size.x();
        }
      }
      break;
    case ShapeKind::capsule:
      switch (b.kind) {
        case ShapeKind::sphere:
          return dispatch(b, fb, a, fa);
        case ShapeKind::capsule: {
          const Segment sa = capsule_segment(a, fa);
          const Segment sb = capsule_segment(b, fb);
          return segment_segment_distance(sa.a, sa.b, sb.a, sb.b) - a.size.x() - b.size.x();
        }
        case ShapeKind::box:
          return segment_box_signed(capsule_segment(a, fa), b, fb) - a.size.x();
      }
      break;
    case ShapeKind::box:
      switch (b.kind) {
        case ShapeKind::sphere:
        case ShapeKind::capsule:
          return dispatch(b, fb, a, fa);
        case ShapeKind::box:
          return box_box_signed(a, fa, b, fb);
      }
      break;
  }
  return 0.0;
}

}  // namespace

double point_box_signed_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& half) {
  const Eigen::Vector3d q = p.cwiseAbs() - half;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

double segment_segment_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                                const Eigen::Vector3d& q0, const Eigen::Vector3d& q1) {
  // Closest points on two segments (Ericson, Real-Time Collision Detection 5.1.9).
  const Eigen::Vector3d d1 = p1 - p0;
  const Eigen::Vector3d d2 = q1 - q0;
  const Eigen::Vector3d r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  constexpr double eps = 1e-15;

  double s = 0.0, t = 0.0;
  if (a <= eps && e <= eps) {
    return r.norm();
  }
  if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      if (denom > eps) {
        s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      }
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

double shape_distance(const CollisionShape& a, const Pose& frame_a,
                      const CollisionShape& b, const Pose& frame_b) {
  return dispatch(a, frame_a, b, frame_b);
}

Aabb shape_world_aabb(const CollisionShape& shape, const Pose& frame) {
  const Pose world = frame * shape.local_pose;
  switch (shape.kind) {
    case ShapeKind::sphere: {
      const Eigen::Vector3d r = Eigen::Vector3d::Constant(shape.size.x());
      return {world.translation - r, world.translation + r};
    }
    case ShapeKind::capsule: {
      const Eigen::Vector3d axis = world.rotation * Eigen::Vector3d::UnitZ();
      const Eigen::Vector3d ext =
          (shape.size.y() * axis).cwiseAbs() + Eigen::Vector3d::Constant(shape.size.x());
      return {world.translation - ext, world.translation + ext};
    }
    case ShapeKind::box: {
      const Eigen::Matrix3d r = world.rotation.toRotationMatrix();
      const Eigen::Vector3d ext = r.cwiseAbs() * shape.size;
      return {world.translation - ext, world.translation + ext};
    }
  }
  return {};
}

double aabb_gap(const Aabb& a, const Aabb& b) {
  const Eigen::Vector3d gap =
      (a.lo - b.hi).cwiseMax(b.lo - a.hi).cwiseMax(Eigen::Vector3d::Zero());
  return gap.norm();
}

}  // namespace binpick
