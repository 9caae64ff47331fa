#pragma once

#include <optional>
#include <span>

#include "lpr/rng.hpp"
#include "lpr/world.hpp"

namespace lpr {

struct PlannerConfig {
  int M = 20;
  double collision_free_fraction = 0.5;  // share of M planned with checking on
  double step_size = 0.1;                // RRT extension step, radians
  int max_iterations = 2000;
  int goal_ik_attempts = 8;
  int shortcut_attempts = 50;
  void validate() const;
};

struct BezierConfig {
  int B = 20;
  // Midpoint std in meters, scaled by the start-goal distance clamped to
  // [0.5, 1.5] so curves stay proportionate across near and far goals.
  double midpoint_std = 0.2;
  int control_points = 3;
  void validate() const;
};

// C(n,i) t^i (1-t)^(n-i). Throws std::invalid_argument outside the domain.
double bernstein(int n, int i, double t);

// P(t) = sum_i B_i^n(t) P_i over the control polygon.
Eigen::Vector2d bezier_point(std::span<const Eigen::Vector2d> control_points, double t);

// A joint-limit-respecting IK solution for the goal pose, collision-free when
// required. The first attempt seeds from the current config when
// seed_from_current is set; later attempts seed from random configs, which is
// what makes repeated calls return distinct solutions.
std::optional<JointConfig> sample_ik_goal(const SceneState& scene, const EePose& goal,
                                          int attempts, Rng& rng, bool require_collision_free,
                                          bool seed_from_current = false);

// Bidirectional RRT-Connect from the scene's current config, with greedy
// shortcut smoothing. Returns waypoints (start and goal included) or nullopt.
std::optional<std::vector<JointConfig>> rrt_connect_plan(const SceneState& scene,
                                                         const JointConfig& goal_config,
                                                         const PlannerConfig& cfg, Rng& rng);

// Up to M planner paths to IK solutions of the goal pose, each normalized to
// path_len configs. The first ceil(collision_free_fraction*M) slots plan with
// collision checking on (their in_collision is false by construction); the
// rest connect straight through whatever is in the way and carry a post-hoc
// in_collision tag. Failures shrink the list. The gripper action implied by
// the goal is applied first so collision semantics match execution.
std::vector<Path> sample_plans(const SceneState& scene, const EePose& goal,
                               const PlannerConfig& cfg, std::uint64_t rng_seed, int path_len);

// Up to B quadratic Bezier candidates: midpoint control point drawn around the
// chord midpoint, evaluated at path_len parameter values, converted to configs
// by continuation IK (previous waypoint seeds the next solve), normalized, and
// tagged post-hoc. Curves with any IK failure are dropped.
std::vector<Path> sample_beziers(const SceneState& scene, const EePose& goal,
                                 const BezierConfig& cfg, std::uint64_t rng_seed, int path_len);

}  // namespace lpr
