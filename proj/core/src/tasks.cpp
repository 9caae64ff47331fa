#include "lpr/tasks.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "lpr/generators.hpp"
#include "lpr/rng.hpp"

namespace lpr {

namespace {

constexpr double kPi = std::numbers::pi;

constexpr double kReachTolerance = 0.04;

// open_lid geometry: handle orbit radius and commanded opening sweep, which
// overshoots the success threshold so noise and IK slack cannot undershoot it.
constexpr double kLidRadius = 0.30;
constexpr double kLidThreshold = 1.80;
constexpr double kLidSweep = 1.95;

// Long pull so paths that ignore the prismatic constraint sag out of the
// grasp band before the threshold.
constexpr double kDrawerThreshold = 0.46;
constexpr double kDrawerPull = 0.52;

constexpr double kBlockThreshold = 0.15;
constexpr double kBlockPush = 0.19;
constexpr double kBlockRadius = 0.03;
constexpr double kBlockHandleStandoff = 0.055;

ArmSpec desk_arm() {
  ArmSpec arm;
  arm.link_lengths = {0.35, 0.30, 0.25, 0.20};
  arm.base_position = {0.0, 0.0};
  arm.joint_limits = {{-kPi, kPi}, {-2.8, 2.8}, {-2.8, 2.8}, {-2.8, 2.8}};
  return arm;
}

JointConfig home_config(Rng& rng) {
  JointConfig q(4);
  q << 0.9, -0.6, -0.5, -0.3;
  std::uniform_real_distribution<double> u(-0.08, 0.08);
  for (int i = 0; i < 4; ++i) q[i] += u(rng);
  return q;
}

Eigen::Vector2d polar(double r, double phi) {
  return {r * std::cos(phi), r * std::sin(phi)};
}

double angle_of(const Eigen::Vector2d& v) { return std::atan2(v.y(), v.x()); }

Eigen::Vector2d rot(double angle, const Eigen::Vector2d& v) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

SceneState base_scene(Rng& rng) {
  SceneState s;
  s.arm = desk_arm();
  s.arm_config = home_config(rng);
  return s;
}

double lid_sign(const ArticulatedObject& lid) {
  return lid.joint_range[1] > 0.0 ? 1.0 : -1.0;
}

// --- reach_target ---------------------------------------------------------
// The target is a bodiless free object at objects[0].position; success is the
// end-effector touching it. Three circular obstacles make straight sweeps
// unreliable.

SceneState make_reach_scene(std::uint64_t seed) {
  Rng rng = make_rng(seed, 101);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    SceneState s = base_scene(rng);
    const Eigen::Vector2d home_ee = forward_kinematics(s.arm, s.arm_config).position;

    const double r = 0.45 + 0.50 * u01(rng);
    const double phi = -2.2 + 4.4 * u01(rng);
    const Eigen::Vector2d target = polar(r, phi);
    if ((target - home_ee).norm() < 0.20) continue;

    ArticulatedObject marker;
    marker.kind = ObjectKind::free_body;
    marker.anchor = target;
    marker.position = target;
    marker.axis_or_pivot = {1.0, 0.0};
    marker.joint_range = {0.0, 0.0};
    marker.success_threshold = 0.0;
    marker.body_radius = 0.0;
    s.objects.push_back(marker);

    bool ok = true;
    for (int i = 0; i < 3 && ok; ++i) {
      Obstacle obs;
      obs.kind = Obstacle::Kind::circle;
      for (int tries = 0;; ++tries) {
        if (tries >= 50) {
          ok = false;
          break;
        }
        // Keep obstacle centers outside the folded arm's swing so the free
        // space stays connected and reach scenes are always plannable.
        obs.radius = 0.05 + 0.04 * u01(rng);
        obs.a = polar(0.52 + 0.30 * u01(rng), -2.5 + 5.0 * u01(rng));
        if ((obs.a - target).norm() < obs.radius + 0.10) continue;
        if (obs.a.norm() < obs.radius + 0.12) continue;
        s.obstacles.push_back(obs);
        if (check_collision(s, s.arm_config)) {
          s.obstacles.pop_back();
          continue;
        }
        break;
      }
    }
    if (!ok) continue;
    // The marker has to admit a collision-free IK solution, or no planner
    // finishes the task on this scene.
    const EePose goal{target, wrap_angle(angle_of(target)), false};
    if (!sample_ik_goal(s, goal, 12, rng, true)) continue;
    return s;
  }
  throw std::runtime_error("make_reach_scene: sampling failed");
}

bool reach_success(const SceneState& s) {
  const Eigen::Vector2d ee = forward_kinematics(s.arm, s.arm_config).position;
  return (ee - s.objects.at(0).position).norm() <= kReachTolerance;
}

EePose reach_goal(const SceneState& s, int stage) {
  if (stage >= 1) throw std::out_of_range("reach_target: stage out of range");
  const Eigen::Vector2d t = s.objects.at(0).position;
  return EePose{t, wrap_angle(angle_of(t)), false};
}

// --- push_block ------------------------------------------------------------

SceneState make_push_scene(std::uint64_t seed) {
  Rng rng = make_rng(seed, 102);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    SceneState s = base_scene(rng);
    const Eigen::Vector2d home_ee = forward_kinematics(s.arm, s.arm_config).position;

    const double r = 0.50 + 0.22 * u01(rng);
    const double phi = -1.5 + 3.0 * u01(rng);
    const Eigen::Vector2d home = polar(r, phi);
    const double psi = 2.0 * kPi * u01(rng);
    const Eigen::Vector2d axis(std::cos(psi), std::sin(psi));

    const double end_r = (home + kBlockPush * axis).norm();
    if (end_r < 0.35 || end_r > 0.92) continue;

    ArticulatedObject block;
    block.kind = ObjectKind::free_body;
    block.anchor = home;
    block.position = home;
    block.axis_or_pivot = axis;
    block.joint_range = {-0.20, 0.60};
    block.success_threshold = kBlockThreshold;
    block.handle_offset = -kBlockHandleStandoff * axis;
    block.body_radius = kBlockRadius;
    s.objects.push_back(block);

    if ((block.handle_position() - home_ee).norm() < kGraspRadius + 0.10) continue;
    if (block.handle_position().norm() < 0.30 || block.handle_position().norm() > 0.95) continue;
    if (check_collision(s, s.arm_config)) continue;
    return s;
  }
  throw std::runtime_error("make_push_scene: sampling failed");
}

bool push_success(const SceneState& s) { return s.objects.at(0).joint_past_threshold(); }

EePose push_goal(const SceneState& s, int stage) {
  if (stage >= 2) throw std::out_of_range("push_block: stage out of range");
  const ArticulatedObject& block = s.objects.at(0);
  const double ori = wrap_angle(angle_of(block.axis_or_pivot));
  if (stage == 0)
    return EePose{block.handle_position(), ori, false};
  const double remaining = kBlockPush - block.joint_value;
  return EePose{block.handle_position() + remaining * block.axis_or_pivot, ori, true};
}

// --- open_drawer -----------------------------------------------------------

SceneState make_drawer_scene(std::uint64_t seed) {
  Rng rng = make_rng(seed, 103);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    SceneState s = base_scene(rng);
    const Eigen::Vector2d home_ee = forward_kinematics(s.arm, s.arm_config).position;

    const double r = 0.62 + 0.26 * u01(rng);
    const double phi = -1.5 + 3.0 * u01(rng);
    const Eigen::Vector2d anchor = polar(r, phi);
    const double tilt = -0.35 + 0.70 * u01(rng);
    const Eigen::Vector2d axis = rot(tilt, (-anchor).normalized());

    const double end_r = (anchor + kDrawerPull * axis).norm();
    if (end_r < 0.30 || end_r > 0.90) continue;

    ArticulatedObject drawer;
    drawer.kind = ObjectKind::prismatic;
    drawer.anchor = anchor;
    drawer.axis_or_pivot = axis;
    drawer.joint_range = {0.0, 0.60};
    drawer.success_threshold = kDrawerThreshold;
    drawer.body_radius = 0.07;  // front-face half-width
    s.objects.push_back(drawer);

    if ((drawer.handle_position() - home_ee).norm() < kGraspRadius + 0.10) continue;
    if (check_collision(s, s.arm_config)) continue;
    return s;
  }
  throw std::runtime_error("make_drawer_scene: sampling failed");
}

bool drawer_success(const SceneState& s) { return s.objects.at(0).joint_past_threshold(); }

EePose drawer_goal(const SceneState& s, int stage) {
  if (stage >= 2) throw std::out_of_range("open_drawer: stage out of range");
  const ArticulatedObject& drawer = s.objects.at(0);
  const double ori = wrap_angle(angle_of(drawer.axis_or_pivot));
  if (stage == 0)
    return EePose{drawer.handle_position(), ori, false};
  const double remaining = kDrawerPull - drawer.joint_value;
  return EePose{drawer.handle_position() + remaining * drawer.axis_or_pivot, ori, true};
}

// --- open_lid ---------------------------------------------------------------

SceneState make_lid_scene(std::uint64_t seed) {
  Rng rng = make_rng(seed, 104);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int attempt = 0; attempt < 2000; ++attempt) {
    SceneState s = base_scene(rng);
    const Eigen::Vector2d home_ee = forward_kinematics(s.arm, s.arm_config).position;

    const Eigen::Vector2d pivot = polar(0.45 + 0.20 * u01(rng), -1.5 + 3.0 * u01(rng));
    const double alpha = 2.0 * kPi * u01(rng);
    const double sign = u01(rng) < 0.5 ? 1.0 : -1.0;

    ArticulatedObject lid;
    lid.kind = ObjectKind::revolute;
    lid.anchor = pivot;
    lid.axis_or_pivot = pivot;
    lid.handle_offset = kLidRadius * Eigen::Vector2d(std::cos(alpha), std::sin(alpha));
    lid.joint_range = sign > 0 ? std::array<double, 2>{0.0, 2.1}
                               : std::array<double, 2>{-2.1, 0.0};
    lid.success_threshold = sign * kLidThreshold;
    lid.body_radius = kLidRadius;  // marks the panel as present
    s.objects.push_back(lid);

    // The whole handle arc has to stay inside the arm's comfortable annulus.
    bool reachable = true;
    for (int k = 0; k <= 4 && reachable; ++k) {
      const double theta = sign * kLidSweep * k / 4.0;
      const double rr = (pivot + kLidRadius * Eigen::Vector2d(std::cos(alpha + theta),
                                                              std::sin(alpha + theta))).norm();
      if (rr < 0.30 || rr > 0.92) reachable = false;
    }
    if (!reachable) continue;

    if ((lid.handle_position() - home_ee).norm() < kGraspRadius + 0.10) continue;
    if (check_collision(s, s.arm_config)) continue;
    return s;
  }
  throw std::runtime_error("make_lid_scene: sampling failed");
}

bool lid_success(const SceneState& s) { return s.objects.at(0).joint_past_threshold(); }

EePose lid_goal(const SceneState& s, int stage) {
  if (stage >= 2) throw std::out_of_range("open_lid: stage out of range");
  const ArticulatedObject& lid = s.objects.at(0);
  const double sign = lid_sign(lid);
  const Eigen::Vector2d pivot = lid.axis_or_pivot;
  if (stage == 0) {
    const Eigen::Vector2d g = lid.handle_position();
    const double tangent = wrap_angle(angle_of(g - pivot) + sign * kPi / 2);
    return EePose{g, tangent, false};
  }
  const double remaining = sign * kLidSweep - lid.joint_value;
  const Eigen::Vector2d g = pivot + rot(remaining, lid.handle_position() - pivot);
  const double tangent = wrap_angle(angle_of(g - pivot) + sign * kPi / 2);
  return EePose{g, tangent, true};
}

// --- shared stage logic ------------------------------------------------------

int manip_stage(const SceneState& s) {
  if (s.attached()) return 1;
  const Eigen::Vector2d ee = forward_kinematics(s.arm, s.arm_config).position;
  for (const auto& obj : s.objects)
    if ((obj.handle_position() - ee).norm() < kGraspRadius) return 1;
  return 0;
}

std::vector<TaskSpec> build_tasks() {
  std::vector<TaskSpec> tasks;

  tasks.push_back(TaskSpec{
      "reach_target", 1, 2, make_reach_scene, reach_success, reach_goal,
      [](const SceneState&) { return 0; }});
  tasks.push_back(TaskSpec{
      "push_block", 2, 3, make_push_scene, push_success, push_goal, manip_stage});
  tasks.push_back(TaskSpec{
      "open_drawer", 2, 2, make_drawer_scene, drawer_success, drawer_goal, manip_stage});
  tasks.push_back(TaskSpec{
      "open_lid", 2, 2, make_lid_scene, lid_success, lid_goal, manip_stage});
  return tasks;
}

const std::vector<TaskSpec>& all_tasks() {
  static const std::vector<TaskSpec> tasks = build_tasks();
  return tasks;
}

}  // namespace

const TaskSpec& get_task(const std::string& name) {
  for (const auto& t : all_tasks())
    if (t.name == name) return t;
  throw std::invalid_argument("unknown task: " + name);
}

const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& t : all_tasks()) n.push_back(t.name);
    return n;
  }();
  return names;
}

namespace {

// Plans a collision-checked approach to the goal pose and returns it
// normalized; nullopt when no collision-free IK solution connects.
std::optional<Path> plan_approach(const SceneState& scene, const EePose& goal, int waypoints,
                                  Rng& rng) {
  PlannerConfig pp;
  for (int attempt = 0; attempt < 6; ++attempt) {
    const auto goal_cfg =
        sample_ik_goal(scene, goal, 8, rng, /*require_collision_free=*/true,
                       /*seed_from_current=*/attempt == 0);
    if (!goal_cfg) continue;
    auto wps = rrt_connect_plan(scene, *goal_cfg, pp, rng);
    if (!wps) continue;
    Path p = normalize_path(make_path(std::move(*wps), PathSource::demo), waypoints);
    p.source = PathSource::demo;
    return p;
  }
  return std::nullopt;
}

// Follows the constraint surface from the current pose to the stage-1 goal by
// continuation IK: each waypoint is solved from the previous one, so the
// solution stays on one branch and the grasp never slips.
std::optional<Path> follow_constraint(const SceneState& scene, const TaskSpec& task,
                                      int waypoints) {
  const ArticulatedObject& obj = scene.objects.at(0);
  const Eigen::Vector2d start = forward_kinematics(scene.arm, scene.arm_config).position;
  const EePose goal = task.goal_oracle(scene, 1);

  std::vector<JointConfig> cfgs{scene.arm_config};
  IkParams ik;
  ik.max_restarts = 1;  // continuation only; restarts would hop branches
  ik.max_iterations = 200;
  for (int k = 1; k < waypoints; ++k) {
    const double t = static_cast<double>(k) / (waypoints - 1);
    EePose wp;
    wp.gripper_closed = true;
    if (obj.kind == ObjectKind::revolute) {
      const Eigen::Vector2d pivot = obj.axis_or_pivot;
      const double full = lid_sign(obj) * kLidSweep - obj.joint_value;
      wp.position = pivot + rot(full * t, start - pivot);
      wp.orientation = wrap_angle(angle_of(wp.position - pivot) + lid_sign(obj) * kPi / 2);
    } else {
      wp.position = start + t * (goal.position - start);
      wp.orientation = goal.orientation;
    }
    const IkResult r = inverse_kinematics(scene.arm, wp, cfgs.back(), 0, ik);
    if (!r.ok()) return std::nullopt;
    cfgs.push_back(r.config);
  }
  Path p = make_path(std::move(cfgs), PathSource::demo);
  return p;
}

}  // namespace

Demo generate_demo(const TaskSpec& task, std::uint64_t seed, int waypoints_per_step) {
  Demo demo;
  demo.task = task.name;
  demo.seed = seed;
  demo.initial_scene = task.make_scene(seed);

  Rng rng = make_rng(seed, 201);
  SceneState scene = demo.initial_scene;
  bool done = false;

  for (int step = 0; step < task.max_steps && !done; ++step) {
    const int stage = task.stage_for(scene);
    const EePose goal = task.goal_oracle(scene, stage);

    std::optional<Path> path;
    if (stage == 0) {
      path = plan_approach(scene, goal, waypoints_per_step, rng);
    } else {
      path = follow_constraint(scene, task, waypoints_per_step);
    }
    if (!path) throw DemoError("demo script found no path for " + task.name);

    path->in_collision = path_in_collision(apply_gripper(scene, goal.gripper_closed), *path);
    StepResult res = execute_path(scene, *path, goal.gripper_closed, task.success);
    if (res.truncated_at + 1 < static_cast<int>(path->configs.size()))
      throw DemoError("demo path truncated for " + task.name);
    if (res.grasp_broken) throw DemoError("demo grasp broke for " + task.name);

    demo.steps.push_back(DemoStep{scene, goal, *path, goal.gripper_closed, res.reward});
    scene = res.scene;
    done = res.done;
  }
  if (!done) throw DemoError("demo script failed on " + task.name);
  return demo;
}

}  // namespace lpr
