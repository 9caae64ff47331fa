#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "lpr/generators.hpp"
#include "lpr/kinematics.hpp"
#include "lpr/rng.hpp"
#include "lpr/world.hpp"

using namespace lpr;

namespace {

constexpr double kPi = std::numbers::pi;

ArmSpec desk_arm() {
  ArmSpec arm;
  arm.link_lengths = {0.35, 0.30, 0.25, 0.20};
  arm.joint_limits = {{-kPi, kPi}, {-2.8, 2.8}, {-2.8, 2.8}, {-2.8, 2.8}};
  return arm;
}

SceneState make_scene(const JointConfig& q) {
  SceneState s;
  s.arm = desk_arm();
  s.arm_config = q;
  return s;
}

JointConfig home() {
  JointConfig q(4);
  q << 0.9, -0.6, -0.5, -0.3;
  return q;
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// Independent oracle: explicit factorial binomial times the monomials.
double bernstein_oracle(int n, int i, double t) {
  const double binom = factorial(n) / (factorial(i) * factorial(n - i));
  return binom * std::pow(t, i) * std::pow(1.0 - t, n - i);
}

// Independent oracle: de Casteljau evaluation.
Eigen::Vector2d de_casteljau(std::vector<Eigen::Vector2d> pts, double t) {
  while (pts.size() > 1) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      pts[i] = (1.0 - t) * pts[i] + t * pts[i + 1];
    pts.pop_back();
  }
  return pts[0];
}

}  // namespace

TEST_CASE("bernstein matches the factorial oracle and partitions unity") {
  for (int n = 0; n <= 8; ++n) {
    for (int it = 0; it <= 20; ++it) {
      const double t = it / 20.0;
      double sum = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double b = bernstein(n, i, t);
        CHECK(b == doctest::Approx(bernstein_oracle(n, i, t)).epsilon(1e-12));
        CHECK(b >= 0.0);
        sum += b;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("bernstein endpoint and symmetry identities") {
  for (int n = 1; n <= 6; ++n) {
    for (int i = 0; i <= n; ++i) {
      CHECK(bernstein(n, i, 0.0) == (i == 0 ? 1.0 : 0.0));
      CHECK(bernstein(n, i, 1.0) == (i == n ? 1.0 : 0.0));
      for (double t : {0.1, 0.37, 0.5, 0.82})
        CHECK(bernstein(n, i, t) ==
              doctest::Approx(bernstein(n, n - i, 1.0 - t)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(bernstein(3, -1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(bernstein(3, 4, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(bernstein(3, 1, -0.01), std::invalid_argument);
  CHECK_THROWS_AS(bernstein(3, 1, 1.01), std::invalid_argument);
}

TEST_CASE("bezier_point endpoint and quadratic midpoint identities") {
  const Eigen::Vector2d p0(0.1, -0.4), p1(0.7, 0.9), p2(-0.3, 0.2);
  const std::vector<Eigen::Vector2d> ctrl{p0, p1, p2};
  CHECK((bezier_point(ctrl, 0.0) - p0).norm() <= 1e-12);
  CHECK((bezier_point(ctrl, 1.0) - p2).norm() <= 1e-12);
  const Eigen::Vector2d mid = 0.25 * p0 + 0.5 * p1 + 0.25 * p2;
  CHECK((bezier_point(ctrl, 0.5) - mid).norm() <= 1e-12);
}

TEST_CASE("bezier_point matches de Casteljau on higher-order polygons") {
  Rng rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 2; n <= 6; ++n) {
    std::vector<Eigen::Vector2d> ctrl;
    for (int i = 0; i <= n; ++i) ctrl.push_back({u(rng), u(rng)});
    for (double t : {0.0, 0.13, 0.5, 0.77, 1.0})
      CHECK((bezier_point(ctrl, t) - de_casteljau(ctrl, t)).norm() < 1e-12);
  }
}

TEST_CASE("sample_ik_goal returns valid and optionally collision-free configs") {
  SceneState s = make_scene(home());
  Obstacle c;
  c.kind = Obstacle::Kind::circle;
  c.a = {0.35, 0.35};
  c.radius = 0.08;
  s.obstacles.push_back(c);

  EePose goal;
  goal.position = {0.55, -0.25};
  goal.orientation = -0.4;

  Rng rng(43);
  const auto q = sample_ik_goal(s, goal, 8, rng, true);
  REQUIRE(q.has_value());
  CHECK((forward_kinematics(s.arm, *q).position - goal.position).norm() <= 1e-4);
  CHECK(s.arm.within_limits(*q, 1e-9));
  CHECK(!check_collision(s, *q));

  EePose far;
  far.position = {2.0, 0.0};
  Rng rng2(43);
  CHECK(!sample_ik_goal(s, far, 8, rng2, true).has_value());
}

TEST_CASE("rrt_connect_plan joins start and goal around a wall") {
  SceneState s = make_scene(home());
  Obstacle wall;
  wall.kind = Obstacle::Kind::segment;
  wall.a = {0.45, 0.50};
  wall.b = {0.45, 0.95};
  s.obstacles.push_back(wall);
  REQUIRE(!check_collision(s, s.arm_config));

  EePose goal;
  goal.position = {0.30, 0.62};
  Rng ik_rng(47);
  const auto goal_q = sample_ik_goal(s, goal, 12, ik_rng, true);
  REQUIRE(goal_q.has_value());

  // The straight joint-space edge is blocked, so the planner has to detour.
  bool direct_free = true;
  const double direct_len = config_distance(s.arm_config, *goal_q);
  const int direct_steps = static_cast<int>(direct_len / 0.01) + 1;
  for (int k = 0; k <= direct_steps && direct_free; ++k) {
    const JointConfig q =
        s.arm_config + (k / static_cast<double>(direct_steps)) * (*goal_q - s.arm_config);
    direct_free = !check_collision(s, q);
  }
  REQUIRE(!direct_free);

  PlannerConfig cfg;
  Rng rng(49);
  const auto plan = rrt_connect_plan(s, *goal_q, cfg, rng);
  REQUIRE(plan.has_value());
  REQUIRE(plan->size() >= 2);
  CHECK((plan->front() - s.arm_config).cwiseAbs().maxCoeff() == 0.0);
  CHECK((plan->back() - *goal_q).cwiseAbs().maxCoeff() == 0.0);
  // Re-validate every edge densely at the planner's resolution.
  for (std::size_t i = 1; i < plan->size(); ++i) {
    const double len = config_distance((*plan)[i - 1], (*plan)[i]);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.025)));
    for (int k = 0; k <= steps; ++k) {
      const JointConfig q = (*plan)[i - 1] + (k / static_cast<double>(steps)) * ((*plan)[i] - (*plan)[i - 1]);
      CHECK(!check_collision(s, q));
    }
  }
}

TEST_CASE("rrt_connect_plan refuses colliding endpoints") {
  SceneState s = make_scene(home());
  Obstacle c;
  c.kind = Obstacle::Kind::circle;
  c.a = forward_kinematics(s.arm, s.arm_config).position;
  c.radius = 0.05;
  s.obstacles.push_back(c);  // the start config collides

  PlannerConfig cfg;
  Rng rng(53);
  JointConfig goal_q(4);
  goal_q << -0.8, 0.5, 0.4, 0.2;
  CHECK(!rrt_connect_plan(s, goal_q, cfg, rng).has_value());

  SceneState s2 = make_scene(home());
  Obstacle c2;
  c2.kind = Obstacle::Kind::circle;
  c2.a = forward_kinematics(s2.arm, goal_q).position;
  c2.radius = 0.05;
  s2.obstacles.push_back(c2);
  Rng rng2(53);
  CHECK(!rrt_connect_plan(s2, goal_q, cfg, rng2).has_value());
}

TEST_CASE("sample_plans honors the endpoint, length and flag contracts") {
  SceneState s = make_scene(home());
  Obstacle c;
  c.kind = Obstacle::Kind::circle;
  c.a = {0.40, 0.30};
  c.radius = 0.10;
  s.obstacles.push_back(c);

  EePose goal;
  goal.position = {0.25, 0.60};
  goal.orientation = 1.2;

  PlannerConfig cfg;
  cfg.M = 8;
  cfg.collision_free_fraction = 0.5;
  const int path_len = 24;
  const auto paths = sample_plans(s, goal, cfg, 57, path_len);
  REQUIRE(!paths.empty());
  CHECK(paths.size() <= 8);

  const SceneState exec_scene = apply_gripper(s, goal.gripper_closed);
  int checked_free = 0;
  for (const auto& p : paths) {
    REQUIRE(static_cast<int>(p.configs.size()) == path_len);
    CHECK(p.source == PathSource::planner);
    CHECK((p.configs.front() - s.arm_config).cwiseAbs().maxCoeff() == 0.0);
    CHECK((forward_kinematics(s.arm, p.configs.back()).position - goal.position).norm() <=
          1e-4);
    // The stored flag always agrees with a fresh waypoint re-check.
    CHECK(p.in_collision == path_in_collision(exec_scene, p));
    checked_free += !p.in_collision;
  }
  // At least the collision-checked half must be collision-free.
  CHECK(checked_free >= static_cast<int>(std::ceil(cfg.collision_free_fraction * cfg.M)) -
                            static_cast<int>(cfg.M - paths.size()));
}

TEST_CASE("sample_plans with fraction 1 yields only collision-free paths") {
  SceneState s = make_scene(home());
  Obstacle c;
  c.kind = Obstacle::Kind::circle;
  c.a = {0.45, 0.25};
  c.radius = 0.09;
  s.obstacles.push_back(c);
  EePose goal;
  goal.position = {0.20, 0.55};
  PlannerConfig cfg;
  cfg.M = 6;
  cfg.collision_free_fraction = 1.0;
  const auto paths = sample_plans(s, goal, cfg, 61, 16);
  REQUIRE(!paths.empty());
  for (const auto& p : paths) CHECK(!p.in_collision);
}

TEST_CASE("sample_plans is deterministic in the seed") {
  SceneState s = make_scene(home());
  EePose goal;
  goal.position = {0.35, 0.45};
  PlannerConfig cfg;
  cfg.M = 5;
  const auto a = sample_plans(s, goal, cfg, 63, 12);
  const auto b = sample_plans(s, goal, cfg, 63, 12);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].in_collision == b[i].in_collision);
    REQUIRE(a[i].configs.size() == b[i].configs.size());
    for (std::size_t k = 0; k < a[i].configs.size(); ++k)
      CHECK((a[i].configs[k] - b[i].configs[k]).cwiseAbs().maxCoeff() == 0.0);
  }
  const auto other = sample_plans(s, goal, cfg, 64, 12);
  bool any_differ = other.size() != a.size();
  for (std::size_t i = 0; !any_differ && i < a.size(); ++i)
    any_differ = (a[i].configs.back() - other[i].configs.back()).cwiseAbs().maxCoeff() > 0;
  CHECK(any_differ);
}

TEST_CASE("sample_plans goal at the current pose yields a near-trivial first path") {
  SceneState s = make_scene(home());
  const EePose here = forward_kinematics(s.arm, s.arm_config);
  PlannerConfig cfg;
  cfg.M = 3;
  const auto paths = sample_plans(s, here, cfg, 67, 8);
  REQUIRE(!paths.empty());
  CHECK(paths.front().cspace_length < 1e-4);
}

TEST_CASE("sample_beziers satisfies endpoint and flag contracts") {
  SceneState s = make_scene(home());
  Obstacle c;
  c.kind = Obstacle::Kind::circle;
  c.a = {0.42, 0.28};
  c.radius = 0.08;
  s.obstacles.push_back(c);

  EePose goal;
  goal.position = {0.22, 0.58};
  goal.orientation = 0.8;

  BezierConfig cfg;
  cfg.B = 12;
  const int path_len = 20;
  const auto paths = sample_beziers(s, goal, cfg, 71, path_len);
  REQUIRE(!paths.empty());
  CHECK(paths.size() <= 12);
  const SceneState exec_scene = apply_gripper(s, goal.gripper_closed);
  for (const auto& p : paths) {
    REQUIRE(static_cast<int>(p.configs.size()) == path_len);
    CHECK(p.source == PathSource::bezier);
    CHECK((p.configs.front() - s.arm_config).cwiseAbs().maxCoeff() == 0.0);
    CHECK((forward_kinematics(s.arm, p.configs.back()).position - goal.position).norm() <=
          1e-4);
    CHECK(p.in_collision == path_in_collision(exec_scene, p));
  }
}

TEST_CASE("sample_beziers with vanishing spread degenerates to the chord") {
  SceneState s = make_scene(home());
  EePose goal;
  goal.position = {0.30, 0.50};
  BezierConfig cfg;
  cfg.B = 4;
  cfg.midpoint_std = 1e-9;
  const auto paths = sample_beziers(s, goal, cfg, 73, 24);
  REQUIRE(!paths.empty());
  const Eigen::Vector2d a = forward_kinematics(s.arm, s.arm_config).position;
  const Eigen::Vector2d b = goal.position;
  const Eigen::Vector2d dir = (b - a).normalized();
  for (const auto& p : paths) {
    for (const auto& q : p.configs) {
      const Eigen::Vector2d e = forward_kinematics(s.arm, q).position;
      const Eigen::Vector2d off = (e - a) - (e - a).dot(dir) * dir;
      CHECK(off.norm() <= 1e-4);  // collinear up to IK tolerance
    }
  }
}

TEST_CASE("sample_beziers drops unreachable curves but keeps contracts") {
  SceneState s = make_scene(home());
  EePose goal;
  goal.position = {1.02, 0.0};  // close to the 1.1 max reach
  BezierConfig cfg;
  cfg.B = 16;
  cfg.midpoint_std = 0.5;  // wide spread pushes many midpoints out of reach
  const auto paths = sample_beziers(s, goal, cfg, 79, 16);
  CHECK(paths.size() <= 16);
  for (const auto& p : paths)
    CHECK((forward_kinematics(s.arm, p.configs.back()).position - goal.position).norm() <=
          1e-4);
}

TEST_CASE("sample_beziers is deterministic in the seed") {
  SceneState s = make_scene(home());
  EePose goal;
  goal.position = {0.28, 0.52};
  BezierConfig cfg;
  cfg.B = 6;
  const auto a = sample_beziers(s, goal, cfg, 83, 12);
  const auto b = sample_beziers(s, goal, cfg, 83, 12);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i].configs.size(); ++k)
      CHECK((a[i].configs[k] - b[i].configs[k]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generator configs validate their ranges") {
  PlannerConfig p;
  p.M = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = PlannerConfig{};
  p.collision_free_fraction = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = PlannerConfig{};
  p.step_size = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  BezierConfig b;
  b.B = -1;
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  b = BezierConfig{};
  b.control_points = 4;
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  b = BezierConfig{};
  b.midpoint_std = 0.0;
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}
