#include "binpick/motion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "binpick/rng.hpp"

namespace binpick {

namespace {

using Eigen::VectorXd;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

// Active-robot joint subspace with eval-counted collision checks.
struct FlatSpace {
  const Workcell* cell;
  const std::set<int>* ignore;
  std::vector<int> robots;          // active robot indices, ascending
  std::vector<int> offsets;
  int dim = 0;
  CompositeConfig fixed;            // configs of inactive robots
  VectorXd lower, upper;
  long evals = 0;
  long budget = 0;

  FlatSpace(const PlanningProblem& p, long eval_budget)
      : cell(&p.cell), ignore(&p.ignore_objects), fixed(p.start), budget(eval_budget) {
    for (int i = 0; i < p.cell.n_arms(); ++i)
      if (p.active_robots.empty() || p.active_robots.count(i)) robots.push_back(i);
    for (int r : robots) {
      offsets.push_back(dim);
      dim += p.cell.arms[r].dof();
    }
    lower.resize(dim);
    upper.resize(dim);
    for (size_t k = 0; k < robots.size(); ++k) {
      lower.segment(offsets[k], p.cell.arms[robots[k]].dof()) = p.cell.arms[robots[k]].lower;
      upper.segment(offsets[k], p.cell.arms[robots[k]].dof()) = p.cell.arms[robots[k]].upper;
    }
  }

  VectorXd flatten(const CompositeConfig& c) const {
    VectorXd x(dim);
    for (size_t k = 0; k < robots.size(); ++k)
      x.segment(offsets[k], cell->arms[robots[k]].dof()) = c[robots[k]];
    return x;
  }

  CompositeConfig unflatten(const VectorXd& x) const {
    CompositeConfig c = fixed;
    for (size_t k = 0; k < robots.size(); ++k)
      c[robots[k]] = x.segment(offsets[k], cell->arms[robots[k]].dof());
    return c;
  }

  bool exhausted() const { return evals >= budget; }

  bool collides(const VectorXd& x) {
    ++evals;
    return collision_check(*cell, unflatten(x), *ignore);
  }

  // Checks the open-closed interval (a, b]; `a` is assumed already checked.
  bool edge_free(const VectorXd& a, const VectorXd& b) {
    const double delta = (b - a).lpNorm<Eigen::Infinity>();
    const int n = std::max(1, static_cast<int>(std::ceil(delta / kCheckResolution)));
    for (int i = 1; i <= n; ++i)
      if (collides(a + (b - a) * (static_cast<double>(i) / n))) return false;
    return true;
  }

  VectorXd sample_uniform(std::mt19937_64& rng) const {
    VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x[i] = uniform_real(rng, lower[i], upper[i]);
    return x;
  }
};

struct Tree {
  std::vector<VectorXd> q;
  std::vector<int> parent;
  std::vector<double> g;
  std::vector<std::vector<int>> children;

  int add(const VectorXd& x, int par, double cost) {
    q.push_back(x);
    parent.push_back(par);
    g.push_back(cost);
    children.emplace_back();
    if (par >= 0) children[par].push_back(static_cast<int>(q.size()) - 1);
    return static_cast<int>(q.size()) - 1;
  }

  int nearest(const VectorXd& x) const {
    int best = 0;
    double best_d = (q[0] - x).squaredNorm();
    for (size_t i = 1; i < q.size(); ++i) {
      const double d = (q[i] - x).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  void rewire(int node, int new_parent, double new_g) {
    auto& old_kids = children[parent[node]];
    old_kids.erase(std::find(old_kids.begin(), old_kids.end(), node));
    parent[node] = new_parent;
    children[new_parent].push_back(node);
    const double shift = new_g - g[node];
    // Propagate the cost change through the subtree.
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      g[v] += shift;
      for (int c : children[v]) stack.push_back(c);
    }
  }

  std::vector<VectorXd> chain_to_root(int node) const {
    std::vector<VectorXd> path;
    for (int v = node; v >= 0; v = parent[v]) path.push_back(q[v]);
    std::reverse(path.begin(), path.end());
    return path;
  }
};

VectorXd steer(const VectorXd& from, const VectorXd& to, double step) {
  const double d = (to - from).norm();
  if (d <= step) return to;
  return from + (to - from) * (step / d);
}

// --- planners ------------------------------------------------------------

struct Solution {
  std::vector<VectorXd> waypoints;
  double cost = std::numeric_limits<double>::infinity();
};

double chain_cost(const std::vector<VectorXd>& pts) {
  double c = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) c += (pts[i] - pts[i - 1]).norm();
  return c;
}

void record_solution(PlanResult& result, const FlatSpace& space, const Timer& timer,
                     double cost) {
  if (result.evals_to_first < 0) {
    result.evals_to_first = space.evals;
    result.solve_ms = timer.ms();
  }
  if (result.cost_history.empty() || cost < result.cost_history.back())
    result.cost_history.push_back(cost);
}

Solution run_rrt(FlatSpace& space, const PlannerConfig& cfg, const VectorXd& start,
                 const VectorXd& goal, PlanResult& result, const Timer& timer) {
  auto rng = make_rng(mix_seed(cfg.rng_seed, 0x1771));
  Tree tree;
  tree.add(start, -1, 0.0);
  Solution sol;
  while (!space.exhausted()) {
    const VectorXd target =
        uniform_real(rng, 0.0, 1.0) < cfg.goal_bias ? goal : space.sample_uniform(rng);
    const int near = tree.nearest(target);
    const VectorXd next = steer(tree.q[near], target, cfg.step_size);
    if ((next - tree.q[near]).norm() < 1e-12) continue;
    if (!space.edge_free(tree.q[near], next)) continue;
    const int node = tree.add(next, near, tree.g[near] + (next - tree.q[near]).norm());
    if ((next - goal).norm() <= cfg.step_size && space.edge_free(next, goal)) {
      const int g = tree.add(goal, node, tree.g[node] + (next - goal).norm());
      sol.waypoints = tree.chain_to_root(g);
      sol.cost = tree.g[g];
      record_solution(result, space, timer, sol.cost);
      return sol;
    }
  }
  return sol;
}

Solution run_rrt_connect(FlatSpace& space, const PlannerConfig& cfg, const VectorXd& start,
                         const VectorXd& goal, PlanResult& result, const Timer& timer) {
  auto rng = make_rng(mix_seed(cfg.rng_seed, 0xc4ec7));
  Tree a, b;
  a.add(start, -1, 0.0);
  b.add(goal, -1, 0.0);
  Tree* fwd = &a;  // fwd grows toward the sample, rev greedily connects
  Tree* rev = &b;
  bool fwd_is_start = true;
  Solution sol;

  while (!space.exhausted()) {
    const VectorXd target = space.sample_uniform(rng);
    const int near = fwd->nearest(target);
    const VectorXd next = steer(fwd->q[near], target, cfg.step_size);
    if ((next - fwd->q[near]).norm() >= 1e-12 && space.edge_free(fwd->q[near], next)) {
      const int new_node = fwd->add(next, near, fwd->g[near] + (next - fwd->q[near]).norm());

      int rnear = rev->nearest(next);
      VectorXd cur = rev->q[rnear];
      int rnode = rnear;
      while (!space.exhausted()) {
        const VectorXd step_to = steer(cur, next, cfg.step_size);
        if (!space.edge_free(cur, step_to)) break;
        rnode = rev->add(step_to, rnode, rev->g[rnode] + (step_to - cur).norm());
        cur = step_to;
        if ((cur - next).norm() < 1e-12) {
          auto fwd_chain = fwd->chain_to_root(new_node);
          auto rev_chain = rev->chain_to_root(rnode);  // root = that tree's endpoint
          std::reverse(rev_chain.begin(), rev_chain.end());
          rev_chain.erase(rev_chain.begin());  // shared meeting config
          std::vector<VectorXd> path = fwd_chain;
          path.insert(path.end(), rev_chain.begin(), rev_chain.end());
          if (!fwd_is_start) std::reverse(path.begin(), path.end());
          sol.waypoints = std::move(path);
          sol.cost = chain_cost(sol.waypoints);
          record_solution(result, space, timer, sol.cost);
          return sol;
        }
      }
    }
    std::swap(fwd, rev);
    fwd_is_start = !fwd_is_start;
  }
  return sol;
}

double rewire_radius(const PlannerConfig& cfg, int n, int dim) {
  const double gamma = 2.0 * cfg.rewire_radius_scale * std::pow(1.0 + 1.0 / dim, 1.0 / dim);
  const double r =
      gamma * std::pow(std::log(n + 1.0) / (n + 1.0), 1.0 / dim) * (cfg.step_size * 4.0);
  return std::min(r, cfg.step_size);
}

// Batch-planner connection radius: the random-geometric-graph radius over
// the joint box, without a step cap. It starts near the space diameter and
// shrinks with the sample count; edges are evaluated lazily in key order, so
// the large early radius only seeds the queue, it does not cost checks.
double bit_radius(const PlannerConfig& cfg, int q, int dim, const FlatSpace& space) {
  double log_vol = 0.0;
  for (int i = 0; i < dim; ++i) log_vol += std::log(space.upper[i] - space.lower[i]);
  const double log_zeta = 0.5 * dim * std::log(M_PI) - std::lgamma(0.5 * dim + 1.0);
  const double inv_d = 1.0 / dim;
  const double rgg = 2.0 * cfg.rewire_radius_scale * std::pow(1.0 + inv_d, inv_d) *
                     std::exp(inv_d * (log_vol - log_zeta)) *
                     std::pow(std::log(q + 1.0) / (q + 1.0), inv_d);
  return std::max(cfg.step_size, rgg);
}

Solution run_rrt_star(FlatSpace& space, const PlannerConfig& cfg, const VectorXd& start,
                      const VectorXd& goal, PlanResult& result, const Timer& timer) {
  auto rng = make_rng(mix_seed(cfg.rng_seed, 0x57a2));
  Tree tree;
  tree.add(start, -1, 0.0);
  int goal_node = -1;
  Solution sol;

  while (!space.exhausted()) {
    const VectorXd target =
        uniform_real(rng, 0.0, 1.0) < cfg.goal_bias ? goal : space.sample_uniform(rng);
    const int near = tree.nearest(target);
    const VectorXd next = steer(tree.q[near], target, cfg.step_size);
    if ((next - tree.q[near]).norm() < 1e-12) continue;
    if (!space.edge_free(tree.q[near], next)) continue;

    // Choose the cheapest collision-free parent in the neighborhood.
    const double radius = rewire_radius(cfg, static_cast<int>(tree.q.size()), space.dim);
    std::vector<int> neighborhood;
    for (size_t i = 0; i < tree.q.size(); ++i)
      if ((tree.q[i] - next).norm() <= radius) neighborhood.push_back(static_cast<int>(i));

    int best_parent = near;
    double best_g = tree.g[near] + (next - tree.q[near]).norm();
    for (int i : neighborhood) {
      const double cand = tree.g[i] + (next - tree.q[i]).norm();
      if (cand < best_g && space.edge_free(tree.q[i], next)) {
        best_parent = i;
        best_g = cand;
      }
    }
    const int node = tree.add(next, best_parent, best_g);

    // Rewire neighbors through the new node where that shortens them.
    for (int i : neighborhood) {
      const double cand = best_g + (tree.q[i] - next).norm();
      if (cand + 1e-12 < tree.g[i] && space.edge_free(next, tree.q[i]))
        tree.rewire(i, node, cand);
    }

    if (goal_node < 0 && (next - goal).norm() <= cfg.step_size &&
        space.edge_free(next, goal)) {
      goal_node = tree.add(goal, node, best_g + (next - goal).norm());
      record_solution(result, space, timer, tree.g[goal_node]);
    } else if (goal_node >= 0 && (next - goal).norm() <= cfg.step_size) {
      const double cand = best_g + (next - goal).norm();
      if (cand + 1e-12 < tree.g[goal_node] && space.edge_free(next, goal)) {
        tree.rewire(goal_node, node, cand);
        record_solution(result, space, timer, tree.g[goal_node]);
      }
    }
  }

  if (goal_node >= 0) {
    record_solution(result, space, timer, tree.g[goal_node]);
    sol.waypoints = tree.chain_to_root(goal_node);
    sol.cost = tree.g[goal_node];
  }
  return sol;
}

// Batched informed sampling tree. Each batch adds samples (uniform before a
// solution, from the informed hyperellipsoid after) and processes an edge
// queue ordered by estimated solution cost through the edge, so the direct
// start-goal edge is tried first and improvements arrive in cost order.
Solution run_bit_star(FlatSpace& space, const PlannerConfig& cfg, const VectorXd& start,
                      const VectorXd& goal, PlanResult& result, const Timer& timer) {
  auto rng = make_rng(mix_seed(cfg.rng_seed, 0xb175));
  Tree tree;
  tree.add(start, -1, 0.0);

  std::vector<VectorXd> samples{goal};
  constexpr int kGoalSample = 0;
  int goal_node = -1;
  double c_best = std::numeric_limits<double>::infinity();
  const double c_min = (goal - start).norm();

  // Rotation taking the unit x axis onto the start-goal axis, for mapping
  // unit-ball samples into the informed hyperellipsoid.
  Eigen::MatrixXd frame = Eigen::MatrixXd::Identity(space.dim, space.dim);
  if (c_min > 1e-12) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(space.dim, space.dim);
    m.col(0) = (goal - start) / c_min;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    frame = qr.householderQ();
    if ((frame.col(0) - m.col(0)).norm() > 1.0) frame = -frame;
  }

  auto sample_informed = [&]() -> VectorXd {
    if (!std::isfinite(c_best) || c_min < 1e-12) return space.sample_uniform(rng);
    for (int tries = 0; tries < 32; ++tries) {
      VectorXd ball(space.dim);
      for (int i = 0; i < space.dim; ++i) ball[i] = uniform_real(rng, -1.0, 1.0);
      if (ball.norm() > 1.0) continue;
      VectorXd radii(space.dim);
      radii[0] = c_best / 2.0;
      const double minor = std::sqrt(std::max(0.0, c_best * c_best - c_min * c_min)) / 2.0;
      for (int i = 1; i < space.dim; ++i) radii[i] = minor;
      const VectorXd x = (start + goal) / 2.0 + frame * radii.asDiagonal() * ball;
      if ((x.array() >= space.lower.array()).all() && (x.array() <= space.upper.array()).all())
        return x;
    }
    return space.sample_uniform(rng);
  };

  struct QueueEdge {
    double key;
    int vertex;
    int target;   // sample index, or ~tree index for rewire edges
    bool operator<(const QueueEdge& o) const {
      if (key != o.key) return key > o.key;  // min-heap
      if (vertex != o.vertex) return vertex > o.vertex;
      return target > o.target;
    }
  };

  auto h = [&](const VectorXd& x) { return (x - goal).norm(); };

  Solution sol;
  int futile_batches = 0;
  while (!space.exhausted()) {
    // Once the incumbent matches the start-goal lower bound it cannot be
    // beaten; batches that evaluate no edges make no progress either, so a
    // streak of them ends the search early instead of spinning on sampling.
    if (c_best <= c_min + 1e-9) break;
    if (futile_batches >= 25) break;
    const long evals_at_batch_start = space.evals;

    // New batch: prune dominated samples (keeping the goal at index 0), add
    // fresh ones, then queue every tree-to-sample edge that could beat the
    // incumbent. Tree-to-tree rewire edges enter the queue only as vertices
    // are added, which keeps the batch setup cost linear in the tree size.
    if (std::isfinite(c_best)) {
      std::vector<VectorXd> kept{samples[kGoalSample]};
      for (size_t s = 1; s < samples.size(); ++s)
        if ((samples[s] - start).norm() + h(samples[s]) < c_best) kept.push_back(samples[s]);
      samples = std::move(kept);
    }
    for (int i = 0; i < cfg.batch_size; ++i) samples.push_back(sample_informed());

    const int n_total = static_cast<int>(tree.q.size() + samples.size());
    const double radius = bit_radius(cfg, n_total, space.dim, space);

    std::priority_queue<QueueEdge> queue;
    std::vector<bool> consumed(samples.size(), false);
    consumed[kGoalSample] = goal_node >= 0;
    for (size_t v = 0; v < tree.q.size(); ++v) {
      if (tree.g[v] + h(tree.q[v]) >= c_best) continue;
      for (size_t s = 0; s < samples.size(); ++s) {
        if (consumed[s]) continue;
        const double d = (samples[s] - tree.q[v]).norm();
        if (d <= radius || static_cast<int>(s) == kGoalSample)
          queue.push({tree.g[v] + d + h(samples[s]), static_cast<int>(v),
                      static_cast<int>(s)});
      }
    }
    while (!queue.empty() && !space.exhausted()) {
      const QueueEdge e = queue.top();
      queue.pop();
      if (e.key >= c_best) break;  // nothing left in this batch can improve

      if (e.target >= 0) {
        if (consumed[e.target]) continue;
        const VectorXd& x = samples[e.target];
        const double d = (x - tree.q[e.vertex]).norm();
        if (tree.g[e.vertex] + d + h(x) >= c_best) continue;
        if (!space.edge_free(tree.q[e.vertex], x)) continue;
        consumed[e.target] = true;
        const int node = tree.add(x, e.vertex, tree.g[e.vertex] + d);
        if (e.target == kGoalSample) {
          goal_node = node;
          c_best = tree.g[node];
          record_solution(result, space, timer, c_best);
        } else {
          // Fresh vertex: queue its own outgoing edges.
          for (size_t s = 0; s < samples.size(); ++s) {
            if (consumed[s]) continue;
            const double ds = (samples[s] - x).norm();
            if (ds <= radius)
              queue.push({tree.g[node] + ds + h(samples[s]), node, static_cast<int>(s)});
          }
          for (size_t w = 0; w + 1 < tree.q.size(); ++w) {
            const double dw = (tree.q[w] - x).norm();
            if (dw <= radius && tree.g[node] + dw + 1e-12 < tree.g[w])
              queue.push({tree.g[node] + dw + h(tree.q[w]), node, ~static_cast<int>(w)});
          }
        }
      } else {
        const int w = ~e.target;
        const double d = (tree.q[w] - tree.q[e.vertex]).norm();
        const double cand = tree.g[e.vertex] + d;
        if (cand + 1e-12 >= tree.g[w]) continue;
        if (cand + h(tree.q[w]) >= c_best) continue;
        if (!space.edge_free(tree.q[e.vertex], tree.q[w])) continue;
        tree.rewire(w, e.vertex, cand);
        if (goal_node >= 0 && tree.g[goal_node] + 1e-12 < c_best) {
          c_best = tree.g[goal_node];
          record_solution(result, space, timer, c_best);
        }
      }
    }
    futile_batches = space.evals == evals_at_batch_start ? futile_batches + 1 : 0;
  }

  if (goal_node >= 0) {
    sol.waypoints = tree.chain_to_root(goal_node);
    sol.cost = tree.g[goal_node];
  }
  return sol;
}

PathPlan assemble_plan(const FlatSpace& space, const std::vector<VectorXd>& flat_waypoints) {
  PathPlan plan;
  for (const VectorXd& x : flat_waypoints) {
    const CompositeConfig c = space.unflatten(x);
    if (!plan.waypoints.empty()) {
      double delta = 0.0;
      for (size_t r = 0; r < c.size(); ++r)
        delta = std::max(delta, (c[r] - plan.waypoints.back()[r]).lpNorm<Eigen::Infinity>());
      if (delta < 1e-12) continue;
      plan.timestamps.push_back(plan.timestamps.back() + segment_duration(delta));
    } else {
      plan.timestamps.push_back(0.0);
    }
    plan.waypoints.push_back(c);
  }
  plan.cost = path_cost(plan);
  return plan;
}

}  // namespace

double segment_duration(double max_joint_delta) {
  constexpr double v = 1.0, a = 2.0;
  if (max_joint_delta <= 0.0) return 0.0;
  if (max_joint_delta <= v * v / a) return 2.0 * std::sqrt(max_joint_delta / a);
  return max_joint_delta / v + v / a;
}

double path_cost(const PathPlan& path) {
  double c = 0.0;
  for (size_t i = 1; i < path.waypoints.size(); ++i) {
    double step2 = 0.0;
    for (size_t r = 0; r < path.waypoints[i].size(); ++r)
      step2 += (path.waypoints[i][r] - path.waypoints[i - 1][r]).squaredNorm();
    c += std::sqrt(step2);
  }
  return c;
}

CompositeConfig sample_path(const PathPlan& path, double t) {
  if (path.empty()) throw std::invalid_argument("sample_path: empty path");
  if (t <= path.timestamps.front()) return path.waypoints.front();
  if (t >= path.timestamps.back()) return path.waypoints.back();
  const auto it = std::upper_bound(path.timestamps.begin(), path.timestamps.end(), t);
  const size_t hi = it - path.timestamps.begin();
  const size_t lo = hi - 1;
  const double span = path.timestamps[hi] - path.timestamps[lo];
  const double s = span > 0.0 ? (t - path.timestamps[lo]) / span : 0.0;
  CompositeConfig c = path.waypoints[lo];
  for (size_t r = 0; r < c.size(); ++r)
    c[r] = path.waypoints[lo][r] + s * (path.waypoints[hi][r] - path.waypoints[lo][r]);
  return c;
}

bool validate_path(const PathPlan& path, const Workcell& cell,
                   const std::set<int>& ignore_objects, double resolution) {
  if (path.empty()) throw std::invalid_argument("validate_path: empty path");
  if (collision_check(cell, path.waypoints.front(), ignore_objects)) return false;
  for (size_t i = 1; i < path.waypoints.size(); ++i) {
    const CompositeConfig& a = path.waypoints[i - 1];
    const CompositeConfig& b = path.waypoints[i];
    double delta = 0.0;
    for (size_t r = 0; r < a.size(); ++r)
      delta = std::max(delta, (b[r] - a[r]).lpNorm<Eigen::Infinity>());
    const int n = std::max(1, static_cast<int>(std::ceil(delta / resolution)));
    for (int k = 1; k <= n; ++k) {
      const double s = static_cast<double>(k) / n;
      CompositeConfig c = a;
      for (size_t r = 0; r < c.size(); ++r) c[r] = a[r] + s * (b[r] - a[r]);
      if (collision_check(cell, c, ignore_objects)) return false;
    }
  }
  return true;
}

PlanResult plan(const PlanningProblem& problem, const PlannerConfig& config) {
  Timer timer;
  PlanResult result;
  const long budget = static_cast<long>(config.time_budget_ms * kEvalsPerMs);
  FlatSpace space(problem, budget);

  if (problem.start.size() != static_cast<size_t>(problem.cell.n_arms()) ||
      problem.goal.size() != static_cast<size_t>(problem.cell.n_arms())) {
    result.status = PlanStatus::invalid_endpoints;
    result.total_ms = timer.ms();
    return result;
  }
  for (int r : space.robots)
    if (!problem.cell.arms[r].within_limits(problem.start[r], 1e-9) ||
        !problem.cell.arms[r].within_limits(problem.goal[r], 1e-9)) {
      result.status = PlanStatus::invalid_endpoints;
      result.total_ms = timer.ms();
      return result;
    }

  const VectorXd start = space.flatten(problem.start);
  const VectorXd goal = space.flatten(problem.goal);
  if (space.collides(start) || space.collides(goal)) {
    result.status = PlanStatus::invalid_endpoints;
    result.evals_used = space.evals;
    result.total_ms = timer.ms();
    return result;
  }

  Solution sol;
  if ((goal - start).norm() < 1e-12) {
    sol.waypoints = {start};
    sol.cost = 0.0;
    record_solution(result, space, timer, 0.0);
  } else {
    switch (config.kind) {
      case PlannerKind::rrt:
        sol = run_rrt(space, config, start, goal, result, timer);
        break;
      case PlannerKind::rrt_connect:
        sol = run_rrt_connect(space, config, start, goal, result, timer);
        break;
      case PlannerKind::rrt_star:
        sol = run_rrt_star(space, config, start, goal, result, timer);
        break;
      case PlannerKind::bit_star:
        sol = run_bit_star(space, config, start, goal, result, timer);
        break;
    }
  }

  result.evals_used = space.evals;
  result.total_ms = timer.ms();
  if (sol.waypoints.empty()) {
    result.status = PlanStatus::infeasible_timeout;
    return result;
  }
  result.status = PlanStatus::ok;
  result.plan = assemble_plan(space, sol.waypoints);
  return result;
}

namespace {

// Time-augmented RRT for one robot against the timed motion of the robots
// planned before it. Node times advance by the trapezoidal edge duration, so
// collision checks see the earlier robots where they actually are.
struct StagedPlan {
  int robot;
  PathPlan path;  // composite path in which only `robot` moves
};

bool staged_collides(const Workcell& cell, const std::vector<StagedPlan>& before,
                     const std::set<int>& ignore, int robot, const JointConfig& q,
                     const CompositeConfig& rest, double t, long& evals) {
  ++evals;
  CompositeConfig c = rest;
  c[robot] = q;
  for (const StagedPlan& sp : before) c[sp.robot] = sample_path(sp.path, t)[sp.robot];
  return collision_check(cell, c, ignore);
}

}  // namespace

PlanResult plan_prioritized(const PlanningProblem& problem, const PlannerConfig& config,
                            const std::vector<int>& priority_order) {
  Timer timer;
  PlanResult result;

  std::vector<int> order = priority_order;
  if (order.empty())
    for (int i = 0; i < problem.cell.n_arms(); ++i)
      if (problem.active_robots.empty() || problem.active_robots.count(i)) order.push_back(i);

  const long total_budget = static_cast<long>(config.time_budget_ms * kEvalsPerMs);
  const long stage_budget = total_budget / std::max<size_t>(1, order.size());

  std::vector<StagedPlan> stages;
  long evals = 0;

  for (size_t stage = 0; stage < order.size(); ++stage) {
    const int robot = order[stage];
    const SerialArm& arm = problem.cell.arms[robot];
    const JointConfig start_q = problem.start[robot];
    const JointConfig goal_q = problem.goal[robot];

    auto collides_at = [&](const JointConfig& q, double t) {
      return staged_collides(problem.cell, stages, problem.ignore_objects, robot, q,
                             problem.start, t, evals);
    };

    if (!arm.within_limits(start_q, 1e-9) || !arm.within_limits(goal_q, 1e-9) ||
        collides_at(start_q, 0.0)) {
      result.status = PlanStatus::invalid_endpoints;
      result.failed_robot = robot;
      result.evals_used = evals;
      result.total_ms = timer.ms();
      return result;
    }

    auto edge_free_at = [&](const JointConfig& a, double ta, const JointConfig& b) {
      const double delta = (b - a).lpNorm<Eigen::Infinity>();
      const double dur = segment_duration(delta);
      const int n = std::max(1, static_cast<int>(std::ceil(delta / kCheckResolution)));
      for (int i = 1; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        if (collides_at(a + s * (b - a), ta + s * dur)) return false;
      }
      return true;
    };

    // The robot parks at its goal; it must stay clear while earlier robots
    // finish their own motion.
    auto parked_clear = [&](double t_arrive) {
      double horizon = t_arrive;
      for (const StagedPlan& sp : stages) horizon = std::max(horizon, sp.path.duration());
      for (double t = t_arrive; t < horizon + 0.05; t += 0.05)
        if (collides_at(goal_q, t)) return false;
      return true;
    };

    struct TimedNode {
      JointConfig q;
      double t;
      int parent;
    };
    std::vector<TimedNode> tree{{start_q, 0.0, -1}};
    auto rng = make_rng(mix_seed(config.rng_seed, 0x9217, stage));
    const long stage_end = evals + stage_budget;
    int goal_index = -1;

    if ((goal_q - start_q).norm() < 1e-12 && parked_clear(0.0)) goal_index = 0;

    while (goal_index < 0 && evals < stage_end) {
      JointConfig target(arm.dof());
      if (uniform_real(rng, 0.0, 1.0) < config.goal_bias) {
        target = goal_q;
      } else {
        for (int i = 0; i < arm.dof(); ++i)
          target[i] = uniform_real(rng, arm.lower[i], arm.upper[i]);
      }
      int near = 0;
      double best = (tree[0].q - target).squaredNorm();
      for (size_t i = 1; i < tree.size(); ++i) {
        const double d = (tree[i].q - target).squaredNorm();
        if (d < best) {
          best = d;
          near = static_cast<int>(i);
        }
      }
      JointConfig next = target;
      const double dist = (target - tree[near].q).norm();
      if (dist < 1e-12) continue;
      if (dist > config.step_size)
        next = tree[near].q + (target - tree[near].q) * (config.step_size / dist);
      if (!edge_free_at(tree[near].q, tree[near].t, next)) continue;
      const double t_next =
          tree[near].t + segment_duration((next - tree[near].q).lpNorm<Eigen::Infinity>());
      tree.push_back({next, t_next, near});
      const int node = static_cast<int>(tree.size()) - 1;

      if ((next - goal_q).norm() <= config.step_size && edge_free_at(next, t_next, goal_q)) {
        const double t_goal =
            t_next + segment_duration((goal_q - next).lpNorm<Eigen::Infinity>());
        if (parked_clear(t_goal)) {
          tree.push_back({goal_q, t_goal, node});
          goal_index = static_cast<int>(tree.size()) - 1;
        }
      }
    }

    if (goal_index < 0) {
      result.status = PlanStatus::infeasible_timeout;
      result.failed_robot = robot;
      result.evals_used = evals;
      result.total_ms = timer.ms();
      return result;
    }

    StagedPlan sp;
    sp.robot = robot;
    std::vector<TimedNode> chain;
    for (int v = goal_index; v >= 0; v = tree[v].parent) chain.push_back(tree[v]);
    std::reverse(chain.begin(), chain.end());
    for (const TimedNode& n : chain) {
      CompositeConfig c = problem.start;
      c[robot] = n.q;
      if (!sp.path.timestamps.empty() && n.t <= sp.path.timestamps.back()) continue;
      sp.path.waypoints.push_back(c);
      sp.path.timestamps.push_back(n.t);
    }
    sp.path.cost = path_cost(sp.path);
    stages.push_back(std::move(sp));
  }

  // Merge the staged paths onto the union of their time knots. Every stage
  // path is piecewise-linear on its own knots, so sampling at the union
  // reproduces each one exactly.
  std::vector<double> knots{0.0};
  for (const StagedPlan& sp : stages)
    knots.insert(knots.end(), sp.path.timestamps.begin(), sp.path.timestamps.end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-9; }),
              knots.end());

  PathPlan merged;
  for (double t : knots) {
    CompositeConfig c = problem.start;
    for (const StagedPlan& sp : stages) c[sp.robot] = sample_path(sp.path, t)[sp.robot];
    merged.waypoints.push_back(c);
    merged.timestamps.push_back(t);
  }
  merged.cost = path_cost(merged);

  result.status = PlanStatus::ok;
  result.plan = std::move(merged);
  result.evals_used = evals;
  result.evals_to_first = evals;
  result.solve_ms = timer.ms();
  result.total_ms = timer.ms();
  result.cost_history = {result.plan.cost};
  return result;
}

std::string planner_name(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::rrt: return "rrt";
    case PlannerKind::rrt_connect: return "rrt_connect";
    case PlannerKind::rrt_star: return "rrt_star";
    case PlannerKind::bit_star: return "bit_star";
  }
  return "unknown";
}

PlannerKind planner_from_name(const std::string& name) {
  if (name == "rrt") return PlannerKind::rrt;
  if (name == "rrt_connect") return PlannerKind::rrt_connect;
  if (name == "rrt_star") return PlannerKind::rrt_star;
  if (name == "bit_star") return PlannerKind::bit_star;
  throw std::invalid_argument("unknown planner: " + name);
}

}  // namespace binpick
