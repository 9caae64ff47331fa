#include "lpr/generators.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace lpr {

namespace {

constexpr double kValidationStep = 0.025;  // radians between edge collision checks

JointConfig random_config(const ArmSpec& arm, Rng& rng) {
  JointConfig q(arm.dof());
  for (int i = 0; i < arm.dof(); ++i) {
    std::uniform_real_distribution<double> u(arm.joint_limits[i][0], arm.joint_limits[i][1]);
    q[i] = u(rng);
  }
  return q;
}

bool edge_valid(const SceneState& scene, const JointConfig& a, const JointConfig& b) {
  const double d = config_distance(a, b);
  const int n = std::max(1, static_cast<int>(std::ceil(d / kValidationStep)));
  for (int k = 1; k <= n; ++k) {
    if (check_collision(scene, a + (static_cast<double>(k) / n) * (b - a))) return false;
  }
  return true;
}

struct Tree {
  std::vector<JointConfig> nodes;
  std::vector<int> parent;

  int add(JointConfig q, int par) {
    nodes.push_back(std::move(q));
    parent.push_back(par);
    return static_cast<int>(nodes.size()) - 1;
  }
  int nearest(const JointConfig& q) const {
    int best = 0;
    double best_d = config_distance(nodes[0], q);
    for (int i = 1; i < static_cast<int>(nodes.size()); ++i) {
      const double d = config_distance(nodes[i], q);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }
};

enum class Extend { trapped, advanced, reached };

Extend extend_tree(Tree& tree, const JointConfig& target, const SceneState& scene,
                   double step, int& new_index) {
  const int near = tree.nearest(target);
  const JointConfig& qn = tree.nodes[near];
  const double d = config_distance(qn, target);
  JointConfig qnew = d <= step ? target : JointConfig(qn + (step / d) * (target - qn));
  if (!edge_valid(scene, qn, qnew)) return Extend::trapped;
  new_index = tree.add(std::move(qnew), near);
  return d <= step ? Extend::reached : Extend::advanced;
}

std::vector<JointConfig> trace_to_root(const Tree& tree, int index) {
  std::vector<JointConfig> out;
  for (int i = index; i >= 0; i = tree.parent[i]) out.push_back(tree.nodes[i]);
  return out;  // leaf first, root last
}

void shortcut(std::vector<JointConfig>& path, const SceneState& scene, int attempts, Rng& rng) {
  for (int a = 0; a < attempts && path.size() > 2; ++a) {
    std::uniform_int_distribution<int> ui(0, static_cast<int>(path.size()) - 1);
    int i = ui(rng), j = ui(rng);
    if (i > j) std::swap(i, j);
    if (j - i < 2) continue;
    if (edge_valid(scene, path[i], path[j]))
      path.erase(path.begin() + i + 1, path.begin() + j);
  }
}

}  // namespace

void PlannerConfig::validate() const {
  if (M < 1) throw std::invalid_argument("PlannerConfig: M must be >= 1");
  if (collision_free_fraction < 0.0 || collision_free_fraction > 1.0)
    throw std::invalid_argument("PlannerConfig: collision_free_fraction outside [0,1]");
  if (step_size <= 0.0) throw std::invalid_argument("PlannerConfig: step_size must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("PlannerConfig: max_iterations must be >= 1");
}

void BezierConfig::validate() const {
  if (B < 1) throw std::invalid_argument("BezierConfig: B must be >= 1");
  if (midpoint_std <= 0.0) throw std::invalid_argument("BezierConfig: midpoint_std must be > 0");
  if (control_points != 3)
    throw std::invalid_argument("BezierConfig: only quadratic curves (3 control points)");
}

double bernstein(int n, int i, double t) {
  if (i < 0 || n < 0 || i > n || t < 0.0 || t > 1.0)
    throw std::invalid_argument("bernstein: domain violation");
  double binom = 1.0;
  for (int k = 1; k <= i; ++k) binom = binom * (n - i + k) / k;
  return binom * std::pow(t, i) * std::pow(1.0 - t, n - i);
}

Eigen::Vector2d bezier_point(std::span<const Eigen::Vector2d> control_points, double t) {
  if (control_points.size() < 2)
    throw std::invalid_argument("bezier_point: need at least 2 control points");
  const int n = static_cast<int>(control_points.size()) - 1;
  Eigen::Vector2d p{0.0, 0.0};
  for (int i = 0; i <= n; ++i) p += bernstein(n, i, t) * control_points[i];
  return p;
}

std::optional<JointConfig> sample_ik_goal(const SceneState& scene, const EePose& goal,
                                          int attempts, Rng& rng, bool require_collision_free,
                                          bool seed_from_current) {
  IkParams params;
  params.max_restarts = 4;
  for (int a = 0; a < attempts; ++a) {
    const JointConfig seed = (a == 0 && seed_from_current) ? scene.arm_config
                                                           : random_config(scene.arm, rng);
    const IkResult r = inverse_kinematics(scene.arm, goal, seed, rng(), params);
    if (!r.ok()) continue;
    if (require_collision_free && check_collision(scene, r.config)) continue;
    return r.config;
  }
  return std::nullopt;
}

std::optional<std::vector<JointConfig>> rrt_connect_plan(const SceneState& scene,
                                                         const JointConfig& goal_config,
                                                         const PlannerConfig& cfg, Rng& rng) {
  const JointConfig& start = scene.arm_config;
  if (check_collision(scene, start) || check_collision(scene, goal_config)) return std::nullopt;

  if (edge_valid(scene, start, goal_config))
    return std::vector<JointConfig>{start, goal_config};

  Tree start_tree, goal_tree;
  start_tree.add(start, -1);
  goal_tree.add(goal_config, -1);
  Tree* ta = &start_tree;
  Tree* tb = &goal_tree;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const JointConfig qrand = random_config(scene.arm, rng);
    int ia = -1;
    if (extend_tree(*ta, qrand, scene, cfg.step_size, ia) != Extend::trapped) {
      const JointConfig bridge = ta->nodes[ia];
      int ib = -1;
      Extend st = Extend::advanced;
      while (st == Extend::advanced) st = extend_tree(*tb, bridge, scene, cfg.step_size, ib);
      if (st == Extend::reached) {
        auto half_a = trace_to_root(*ta, ia);   // bridge ... start-or-goal root
        auto half_b = trace_to_root(*tb, ib);   // bridge ... other root
        std::reverse(half_a.begin(), half_a.end());
        half_a.insert(half_a.end(), half_b.begin() + 1, half_b.end());
        if (ta != &start_tree) std::reverse(half_a.begin(), half_a.end());
        shortcut(half_a, scene, cfg.shortcut_attempts, rng);
        return half_a;
      }
    }
    std::swap(ta, tb);
  }
  return std::nullopt;
}

std::vector<Path> sample_plans(const SceneState& scene, const EePose& goal,
                               const PlannerConfig& cfg, std::uint64_t rng_seed, int path_len) {
  cfg.validate();
  const SceneState s = apply_gripper(scene, goal.gripper_closed);
  Rng rng(rng_seed);
  const int n_checked = static_cast<int>(std::ceil(cfg.collision_free_fraction * cfg.M));

  std::vector<Path> paths;
  paths.reserve(cfg.M);
  for (int k = 0; k < cfg.M; ++k) {
    const bool checked = k < n_checked;
    const auto goal_cfg =
        sample_ik_goal(s, goal, cfg.goal_ik_attempts, rng, checked, /*seed_from_current=*/k == 0);
    if (!goal_cfg) continue;

    if (checked) {
      auto wps = rrt_connect_plan(s, *goal_cfg, cfg, rng);
      if (!wps) continue;
      Path p = normalize_path(make_path(std::move(*wps), PathSource::planner), path_len);
      // Normalization samples points the tree never validated; keep the
      // no-colliding-config guarantee by re-checking and dropping violators.
      if (path_in_collision(s, p)) continue;
      p.in_collision = false;
      paths.push_back(std::move(p));
    } else {
      Path p = normalize_path(
          make_path({scene.arm_config, *goal_cfg}, PathSource::planner), path_len);
      p.in_collision = path_in_collision(s, p);
      paths.push_back(std::move(p));
    }
  }
  return paths;
}

std::vector<Path> sample_beziers(const SceneState& scene, const EePose& goal,
                                 const BezierConfig& cfg, std::uint64_t rng_seed, int path_len) {
  cfg.validate();
  const SceneState s = apply_gripper(scene, goal.gripper_closed);
  Rng rng(rng_seed);

  const EePose start = forward_kinematics(s.arm, s.arm_config);
  const Eigen::Vector2d p0 = start.position;
  const Eigen::Vector2d p2 = goal.position;
  const double spread = cfg.midpoint_std * std::clamp((p2 - p0).norm(), 0.5, 1.5);
  const double dori = wrap_angle(goal.orientation - start.orientation);
  std::normal_distribution<double> gauss(0.0, spread);

  IkParams ik;
  ik.max_restarts = 1;  // continuation from the previous waypoint only
  ik.max_iterations = 200;

  std::vector<Path> paths;
  paths.reserve(cfg.B);
  for (int b = 0; b < cfg.B; ++b) {
    const double gx = gauss(rng), gy = gauss(rng);
    const std::array<Eigen::Vector2d, 3> ctrl = {
        p0, Eigen::Vector2d(0.5 * (p0 + p2) + Eigen::Vector2d(gx, gy)), p2};

    std::vector<JointConfig> cfgs{s.arm_config};
    bool ok = true;
    for (int k = 1; k < path_len; ++k) {
      const double t = static_cast<double>(k) / (path_len - 1);
      EePose wp;
      wp.position = bezier_point(ctrl, t);
      wp.orientation = wrap_angle(start.orientation + t * dori);
      const IkResult r = inverse_kinematics(s.arm, wp, cfgs.back(), 0, ik);
      if (!r.ok()) {
        ok = false;
        break;
      }
      cfgs.push_back(r.config);
    }
    if (!ok) continue;

    // Already path_len waypoints at uniform curve parameters. Resampling in
    // joint space would pull the end effector off the sampled curve.
    Path p = make_path(std::move(cfgs), PathSource::bezier);
    p.in_collision = path_in_collision(s, p);
    paths.push_back(std::move(p));
  }
  return paths;
}

}  // namespace lpr
