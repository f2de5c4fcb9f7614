#include "binpick/scene.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "binpick/rng.hpp"

namespace binpick {

namespace {

struct ClassSpec {
  ShapeKind kind;
  Eigen::Vector3d size;    // capsule (r, hl, 0) / box half-extents
  double half_height;      // vertical half-extent when standing
  double footprint_radius; // circumscribed horizontal radius
  double quality;
  double grasp_width;
};

const ClassSpec& class_spec(ObjectClass klass) {
  static const ClassSpec specs[kObjectClassCount] = {
      // elongated_capsule: cylinder-like item standing on end
      {ShapeKind::capsule, {0.02, 0.06, 0}, 0.08, 0.02, 0.90, 0.04},
      // small_box
      {ShapeKind::box, {0.025, 0.025, 0.03}, 0.03, 0.0354, 0.85, 0.05},
      // thin_box
      {ShapeKind::box, {0.04, 0.015, 0.04}, 0.04, 0.0427, 0.80, 0.03},
      // round_capsule: short stout cylinder stand-in
      {ShapeKind::capsule, {0.03, 0.02, 0}, 0.05, 0.03, 0.75, 0.06},
      // flat_box
      {ShapeKind::box, {0.045, 0.045, 0.015}, 0.015, 0.0637, 0.70, 0.09},
  };
  return specs[static_cast<int>(klass)];
}

CollisionShape class_shape(ObjectClass klass) {
  const ClassSpec& s = class_spec(klass);
  if (s.kind == ShapeKind::capsule) return CollisionShape::make_capsule(s.size.x(), s.size.y());
  return CollisionShape::make_box(s.size);
}

Eigen::Quaterniond top_down(double roll) {
  const double c = std::cos(roll);
  const double s = std::sin(roll);
  Eigen::Matrix3d r;
  r.col(0) = Eigen::Vector3d(c, s, 0);
  r.col(1) = Eigen::Vector3d(s, -c, 0);
  r.col(2) = Eigen::Vector3d(0, 0, -1);
  return Eigen::Quaterniond(r);
}

double top_height(const ObjectInstance& o) {
  return o.pose.translation.z() + class_spec(o.klass).half_height;
}

// Point-in-footprint test in the horizontal plane. Boxes use their yaw;
// capsules are rotationally symmetric.
bool footprint_contains(const ObjectInstance& o, double x, double y) {
  const ClassSpec& s = class_spec(o.klass);
  const double dx = x - o.pose.translation.x();
  const double dy = y - o.pose.translation.y();
  if (s.kind == ShapeKind::capsule) return dx * dx + dy * dy <= s.size.x() * s.size.x();
  const Eigen::Vector3d ex = o.pose.rotation * Eigen::Vector3d::UnitX();
  const double yaw = std::atan2(ex.y(), ex.x());
  const double c = std::cos(-yaw), sn = std::sin(-yaw);
  const double lx = c * dx - sn * dy;
  const double ly = sn * dx + c * dy;
  return std::abs(lx) <= s.size.x() && std::abs(ly) <= s.size.y();
}

constexpr double kPlacementGap = 0.03;   // between footprint circles on a layer
constexpr double kWallGap = 0.01;        // object surface to bin wall
constexpr double kBinHalfX = 0.25;
constexpr double kBinHalfY = 0.20;

bool circles_clash(const ObjectInstance& a, double x, double y, double fr) {
  const double need = class_spec(a.klass).footprint_radius + fr + kPlacementGap;
  const double dx = a.pose.translation.x() - x;
  const double dy = a.pose.translation.y() - y;
  return dx * dx + dy * dy < need * need;
}

// Lateral surface distance between a placed object and a candidate shape,
// ignoring heights: negative means the real footprints overlap. The
// circumscribed circles overestimate box footprints, so circle tests alone
// would let an object count as "stacked on" a neighbour it merely flanks.
double lateral_gap(const ObjectInstance& other, const CollisionShape& shape, double x, double y,
                   double yaw) {
  Pose pa = other.pose;
  pa.translation.z() = 0.0;
  Pose pb;
  pb.translation = Eigen::Vector3d(x, y, 0.0);
  pb.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
  return shape_distance(shape, pb, other.shape, pa);
}

}  // namespace

double base_quality(ObjectClass klass) { return class_spec(klass).quality; }

int BinScene::live_count() const {
  int n = 0;
  for (const ObjectInstance& o : objects)
    if (!o.removed) ++n;
  return n;
}

const ObjectInstance* BinScene::find(int id) const {
  for (const ObjectInstance& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

Pose pregrasp_pose(const GraspProposal& g) {
  Pose p = g.pose;
  p.translation.z() += kPregraspHeight;
  return p;
}

namespace {

std::optional<BinScene> try_generate(Placement placement, int n_objects, std::uint64_t seed,
                                     int restart) {
  BinScene scene;
  scene.placement = placement;
  scene.rng_seed = seed;
  auto rng = make_rng(mix_seed(seed, 0x5ce2e, restart));

  double paired_x = 0.0;
  for (int i = 0; i < n_objects; ++i) {
    const ObjectClass klass = static_cast<ObjectClass>(i % kObjectClassCount);
    const ClassSpec& spec = class_spec(klass);

    // Antithetic x pairs keep the sample mean of the offsets exact: centred
    // scenes average to the mid-axis, excentred ones to 0.10 m off it.
    double x;
    if (i % 2 == 0) {
      x = placement == Placement::centred ? uniform_real(rng, -0.15, 0.15)
                                          : uniform_real(rng, -0.05, 0.25);
      paired_x = x;
    } else {
      x = placement == Placement::centred ? -paired_x : 0.20 - paired_x;
    }
    // A top-down pick parks the wrist cylinder directly above the object;
    // keep centers far enough from the walls that the wrist clears the wall
    // edge even for the shortest class.
    constexpr double kPickBandX = 0.185;
    constexpr double kPickBandY = 0.135;
    const double x_max = std::min(kBinHalfX - spec.footprint_radius - kWallGap, kPickBandX);
    x = std::clamp(x, -x_max, x_max);
    const double y_max = std::min(kBinHalfY - spec.footprint_radius - kWallGap, kPickBandY);

    ObjectInstance obj;
    obj.id = i;
    obj.klass = klass;
    obj.shape = class_shape(klass);

    bool placed = false;
    for (int attempt = 0; attempt < 600 && !placed; ++attempt) {
      // Early attempts hold the drawn x; later ones jitter symmetrically
      // around it, eventually spanning the whole bin, so a crowded column
      // cannot exhaust the retries. Symmetric jitter leaves the placement
      // mean untouched in expectation.
      double ax = x;
      if (attempt >= 50) {
        const double r = 0.02 + 0.35 * (attempt - 50) / 550.0;
        ax = std::clamp(x + uniform_real(rng, -r, r), -x_max, x_max);
      }
      const double y = std::clamp(uniform_real(rng, -0.15, 0.15), -y_max, y_max);
      const double yaw = uniform_real(rng, 0.0, 2.0 * M_PI);

      // Picks retreat straight up, which preserves lateral gaps, so a pair
      // of objects must either truly overlap (stacking support) or keep the
      // full placement gap; anything in between leaves the lifted object
      // hovering within the planner's clearance margin of its neighbour.
      bool clear_all = true;  // full gap to every placed object
      bool annulus = false;   // near a layer-0 object without overlapping it
      bool clash1 = false;    // near or over a layer-1 object
      double support = 0.0;
      for (const ObjectInstance& other : scene.objects) {
        if (!circles_clash(other, ax, y, spec.footprint_radius)) continue;
        const double gap = lateral_gap(other, obj.shape, ax, y, yaw);
        if (gap >= kPlacementGap) continue;
        clear_all = false;
        if (other.layer == 1) {
          clash1 = true;
        } else if (gap < 0.0) {
          support = std::max(support, top_height(other));
        } else {
          annulus = true;
        }
      }

      int layer = -1;
      double bottom = 0.0;
      if (clear_all) {
        layer = 0;
      } else if (!clash1 && !annulus && support > 0.0) {
        layer = 1;
        bottom = support;
      }
      if (layer < 0) continue;

      obj.layer = layer;
      obj.pose.translation = Eigen::Vector3d(ax, y, bottom + spec.half_height);
      obj.pose.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()));
      placed = true;
    }
    if (!placed) return std::nullopt;
    scene.objects.push_back(obj);
  }
  return scene;
}

}  // namespace

BinScene generate_scene(Placement placement, int n_objects, std::uint64_t seed) {
  // The pairwise gap rules make a few dense draws unfinishable no matter how
  // the last object jitters; rejection-sample whole scenes in that case.
  for (int restart = 0; restart < 64; ++restart)
    if (auto scene = try_generate(placement, n_objects, seed, restart)) return *scene;
  throw std::runtime_error("generate_scene: no feasible packing after 64 restarts");
}

double occlusion_fraction(const BinScene& scene, int id) {
  const ObjectInstance* obj = scene.find(id);
  if (!obj) throw std::invalid_argument("occlusion_fraction: unknown object " + std::to_string(id));

  std::vector<const ObjectInstance*> above;
  for (const ObjectInstance& o : scene.objects)
    if (!o.removed && o.layer > obj->layer) above.push_back(&o);
  if (above.empty()) return 0.0;

  const double fr = class_spec(obj->klass).footprint_radius;
  const double cx = obj->pose.translation.x();
  const double cy = obj->pose.translation.y();

  constexpr int kGrid = 25;
  int inside = 0, covered = 0;
  for (int i = 0; i < kGrid; ++i)
    for (int j = 0; j < kGrid; ++j) {
      const double u = (i + 0.5) / kGrid * 2.0 - 1.0;
      const double v = (j + 0.5) / kGrid * 2.0 - 1.0;
      if (u * u + v * v > 1.0) continue;
      ++inside;
      const double px = cx + u * fr;
      const double py = cy + v * fr;
      for (const ObjectInstance* o : above)
        if (footprint_contains(*o, px, py)) {
          ++covered;
          break;
        }
    }
  return inside ? static_cast<double>(covered) / inside : 0.0;
}

bool retrievable(const BinScene& scene, int id) {
  const ObjectInstance* obj = scene.find(id);
  if (!obj) throw std::invalid_argument("retrievable: unknown object " + std::to_string(id));

  Aabb swept = shape_world_aabb(obj->shape, obj->pose);
  swept.hi.z() += kPregraspHeight;

  constexpr double kStep = 0.005;
  const int n = static_cast<int>(std::ceil(kPregraspHeight / kStep));
  for (const ObjectInstance& other : scene.objects) {
    if (other.removed || other.id == id) continue;
    if (aabb_gap(swept, shape_world_aabb(other.shape, other.pose)) > 0.0) continue;
    for (int i = 0; i <= n; ++i) {
      Pose lifted = obj->pose;
      lifted.translation.z() += kPregraspHeight * i / n;
      // A micron of slack so resting contact at the start state, or a slide
      // along it, does not read as penetration.
      if (shape_distance(obj->shape, lifted, other.shape, other.pose) < -1e-6) return false;
    }
  }
  return true;
}

GraspMap propose_grasps(const BinScene& scene, int m, std::uint64_t seed) {
  GraspMap map;
  map.per_object_count = m;
  for (const ObjectInstance& obj : scene.objects) {
    if (obj.removed) continue;
    const ClassSpec& spec = class_spec(obj.klass);
    const double quality =
        std::max(0.0, spec.quality * (1.0 - occlusion_fraction(scene, obj.id)));
    auto rng = make_rng(mix_seed(seed, 0x9fa5b, static_cast<std::uint64_t>(obj.id)));
    const double phase = uniform_real(rng, 0.0, M_PI);
    for (int k = 0; k < m; ++k) {
      GraspProposal g;
      g.object_id = obj.id;
      g.quality = quality;
      g.width = spec.grasp_width;
      g.approach_angle = phase + k * M_PI / m;
      g.pose.rotation = top_down(g.approach_angle);
      g.pose.translation = obj.pose.translation;
      g.pose.translation.z() = top_height(obj) - 0.01;
      map.proposals.push_back(g);
    }
  }
  std::stable_sort(map.proposals.begin(), map.proposals.end(),
                   [](const GraspProposal& a, const GraspProposal& b) {
                     return a.quality > b.quality;
                   });
  return map;
}

std::vector<ReachableGrasp> reachable_grasps(const SerialArm& arm, const GraspMap& map,
                                             const Workcell& cell) {
  int arm_index = -1;
  for (int i = 0; i < cell.n_arms(); ++i)
    if ((cell.arms[i].base_pose.translation - arm.base_pose.translation).norm() < 1e-12) {
      arm_index = i;
      break;
    }
  if (arm_index < 0) throw std::invalid_argument("reachable_grasps: arm is not in the cell");

  // Numeric inverse kinematics is seed-sensitive for lateral close-in
  // targets, so after the home seed try postures pre-swung toward the
  // target's bearing in the base frame.
  const auto solve_reach = [&arm](const Pose& target, const JointConfig& first) {
    IkResult ik = inverse_kinematics(arm, target, first);
    if (ik) return ik;
    const Eigen::Vector3d local = arm.base_pose.inverse().apply(target.translation);
    const double bearing = std::atan2(local.y(), local.x());
    JointConfig seed = Eigen::VectorXd::Zero(arm.dof());
    for (double elbow : {1.2, 1.8, 0.7}) {
      seed[0] = std::clamp(bearing, arm.lower[0], arm.upper[0]);
      seed[1] = 0.5;
      seed[3] = elbow;
      seed[5] = 0.5;
      ik = inverse_kinematics(arm, target, seed);
      if (ik) return ik;
    }
    return ik;
  };

  std::vector<ReachableGrasp> out;
  for (const GraspProposal& g : map.proposals) {
    const IkResult grasp_ik = solve_reach(g.pose, arm.home);
    if (!grasp_ik) continue;
    const IkResult pre_ik = solve_reach(pregrasp_pose(g), grasp_ik.q);
    if (!pre_ik) continue;
    const std::set<int> ignore = {g.object_id};
    if (single_arm_collision(cell, arm_index, grasp_ik.q, ignore)) continue;
    if (single_arm_collision(cell, arm_index, pre_ik.q, ignore)) continue;
    out.push_back({g, grasp_ik.q, pre_ik.q});
  }
  return out;
}

BinScene remove_object(const BinScene& scene, int id) {
  BinScene next = scene;
  for (ObjectInstance& o : next.objects)
    if (o.id == id) {
      if (o.removed)
        throw std::logic_error("remove_object: object " + std::to_string(id) +
                               " already removed");
      o.removed = true;
      return next;
    }
  throw std::invalid_argument("remove_object: unknown object " + std::to_string(id));
}

Workcell with_objects(Workcell cell, const BinScene& scene) {
  cell.objects.clear();
  for (const ObjectInstance& o : scene.objects)
    if (!o.removed) cell.objects.push_back({o.id, o.shape, o.pose});
  return cell;
}

std::string placement_name(Placement p) {
  return p == Placement::centred ? "centred" : "excentred";
}

Placement placement_from_name(const std::string& name) {
  if (name == "centred") return Placement::centred;
  if (name == "excentred") return Placement::excentred;
  throw std::invalid_argument("unknown placement: " + name);
}

}  // namespace binpick
