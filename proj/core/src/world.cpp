#include "lpr/world.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lpr {

namespace {

// Drawer fronts sit slightly behind the handle, and lid panels stop short of
// the handle knob, so grasp points stay clear of the collision bodies.
constexpr double kDrawerFaceInset = 0.03;
constexpr double kPanelFraction = 0.85;

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

int orientation_sign(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const Eigen::Vector2d& c) {
  const double v = cross2(b - a, c - a);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool on_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
  return p.x() >= std::min(a.x(), b.x()) && p.x() <= std::max(a.x(), b.x()) &&
         p.y() >= std::min(a.y(), b.y()) && p.y() <= std::max(a.y(), b.y());
}

Eigen::Vector2d rot(double angle, const Eigen::Vector2d& v) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

}  // namespace

bool segments_intersect(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                        const Eigen::Vector2d& q1, const Eigen::Vector2d& q2) {
  const int o1 = orientation_sign(p1, p2, q1);
  const int o2 = orientation_sign(p1, p2, q2);
  const int o3 = orientation_sign(q1, q2, p1);
  const int o4 = orientation_sign(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

bool segment_hits_obstacle(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                           const Obstacle& obs) {
  if (obs.kind == Obstacle::Kind::segment)
    return segments_intersect(a, b, obs.a, obs.b);
  return point_segment_distance(obs.a, a, b) <= obs.radius;
}

const char* to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::prismatic: return "prismatic";
    case ObjectKind::revolute: return "revolute";
    case ObjectKind::free_body: return "free";
  }
  return "unknown";
}

Eigen::Vector2d ArticulatedObject::handle_position() const {
  switch (kind) {
    case ObjectKind::prismatic:
      return anchor + handle_offset + axis_or_pivot * joint_value;
    case ObjectKind::revolute:
      return axis_or_pivot + rot(joint_value, handle_offset);
    case ObjectKind::free_body:
      return position + handle_offset;
  }
  return anchor;
}

std::vector<Obstacle> ArticulatedObject::body_shapes() const {
  std::vector<Obstacle> shapes;
  if (body_radius <= 0.0) return shapes;
  switch (kind) {
    case ObjectKind::prismatic: {
      // Front face: a segment perpendicular to the slide axis, body_radius is
      // its half-width.
      const Eigen::Vector2d center =
          anchor + handle_offset + axis_or_pivot * joint_value - kDrawerFaceInset * axis_or_pivot;
      const Eigen::Vector2d perp(-axis_or_pivot.y(), axis_or_pivot.x());
      shapes.push_back(
          {Obstacle::Kind::segment, center - body_radius * perp, center + body_radius * perp, 0.0});
      break;
    }
    case ObjectKind::revolute: {
      // The lid panel: pivot toward the handle, stopping short of the knob.
      const Eigen::Vector2d tip =
          axis_or_pivot + kPanelFraction * (handle_position() - axis_or_pivot);
      shapes.push_back({Obstacle::Kind::segment, axis_or_pivot, tip, 0.0});
      break;
    }
    case ObjectKind::free_body:
      shapes.push_back({Obstacle::Kind::circle, position, position, body_radius});
      break;
  }
  return shapes;
}

bool ArticulatedObject::joint_past_threshold() const {
  return success_threshold >= 0.0 ? joint_value >= success_threshold
                                  : joint_value <= success_threshold;
}

double ArticulatedObject::clamp_joint(double v) const {
  return std::clamp(v, joint_range[0], joint_range[1]);
}

void ArticulatedObject::validate() const {
  if (!(joint_range[0] <= joint_range[1]))
    throw std::invalid_argument("ArticulatedObject: empty joint_range");
  if (joint_value < joint_range[0] || joint_value > joint_range[1])
    throw std::invalid_argument("ArticulatedObject: joint_value outside joint_range");
  if (success_threshold < joint_range[0] || success_threshold > joint_range[1])
    throw std::invalid_argument("ArticulatedObject: success_threshold outside joint_range");
  if (kind != ObjectKind::free_body && std::abs(success_threshold) <= 0.0)
    throw std::invalid_argument("ArticulatedObject: articulated threshold must be nonzero");
  if (kind == ObjectKind::prismatic || kind == ObjectKind::free_body) {
    if (std::abs(axis_or_pivot.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("ArticulatedObject: axis must be unit length");
  }
}

EePose SceneState::ee_pose() const {
  EePose p = forward_kinematics(arm, arm_config);
  p.gripper_closed = gripper_closed;
  return p;
}

namespace {

// Static obstacles plus the bodies of every object the arm is not holding.
std::vector<Obstacle> collision_shapes(const SceneState& scene) {
  std::vector<Obstacle> shapes = scene.obstacles;
  const int held = scene.grasp ? scene.grasp->object : -1;
  for (int i = 0; i < static_cast<int>(scene.objects.size()); ++i) {
    if (i == held) continue;
    for (auto& s : scene.objects[i].body_shapes()) shapes.push_back(s);
  }
  return shapes;
}

bool config_collides(const ArmSpec& arm, const JointConfig& q,
                     const std::vector<Obstacle>& shapes) {
  if (shapes.empty()) return false;
  const auto pts = link_points(arm, q);
  for (std::size_t i = 1; i < pts.size(); ++i)
    for (const auto& obs : shapes)
      if (segment_hits_obstacle(pts[i - 1], pts[i], obs)) return true;
  return false;
}

}  // namespace

bool check_collision(const SceneState& scene, const JointConfig& q) {
  return config_collides(scene.arm, q, collision_shapes(scene));
}

bool path_in_collision(const SceneState& scene, const Path& path) {
  for (const auto& q : path.configs)
    if (check_collision(scene, q)) return true;
  return false;
}

SceneState apply_gripper(const SceneState& scene, bool gripper_closed) {
  SceneState s = scene;
  s.gripper_closed = gripper_closed;
  if (!gripper_closed) {
    s.grasp.reset();
    return s;
  }
  if (s.grasp) return s;
  const Eigen::Vector2d ee = forward_kinematics(s.arm, s.arm_config).position;
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(s.objects.size()); ++i) {
    const double d = (s.objects[i].handle_position() - ee).norm();
    if (d <= kGraspRadius && d < best_d) {
      best_d = d;
      best = i;
    }
  }
  if (best >= 0)
    s.grasp = Grasp{best, s.objects[best].joint_value, ee};
  return s;
}

StepResult execute_path(const SceneState& scene, const Path& path, bool gripper_closed,
                        const SuccessPredicate& success) {
  if (path.configs.empty()) throw std::invalid_argument("execute_path: empty path");

  StepResult res;
  res.scene = apply_gripper(scene, gripper_closed);
  SceneState& s = res.scene;

  Eigen::Vector2d prev_ee = forward_kinematics(s.arm, s.arm_config).position;
  res.truncated_at = static_cast<int>(path.configs.size()) - 1;

  for (std::size_t i = 1; i < path.configs.size(); ++i) {
    const JointConfig& q = path.configs[i];
    // Only static obstacles stop motion; object-body contact is permitted so
    // the arm can work up against the things it manipulates.
    if (config_collides(s.arm, q, s.obstacles)) {
      res.truncated_at = static_cast<int>(i) - 1;
      break;
    }
    const Eigen::Vector2d ee = forward_kinematics(s.arm, q).position;

    if (s.grasp) {
      ArticulatedObject& obj = s.objects[s.grasp->object];
      const Grasp& g = *s.grasp;
      bool broken = false;
      switch (obj.kind) {
        case ObjectKind::prismatic: {
          obj.joint_value =
              obj.clamp_joint(obj.joint_value + obj.axis_or_pivot.dot(ee - prev_ee));
          const Eigen::Vector2d expected =
              g.ee_at_attach + obj.axis_or_pivot * (obj.joint_value - g.joint_at_attach);
          broken = (ee - expected).norm() > kGraspBreakDistance;
          break;
        }
        case ObjectKind::revolute: {
          const Eigen::Vector2d pivot = obj.axis_or_pivot;
          if ((ee - pivot).norm() > 1e-9 && (prev_ee - pivot).norm() > 1e-9) {
            const double dphi = wrap_angle(std::atan2(ee.y() - pivot.y(), ee.x() - pivot.x()) -
                                           std::atan2(prev_ee.y() - pivot.y(),
                                                      prev_ee.x() - pivot.x()));
            obj.joint_value = obj.clamp_joint(obj.joint_value + dphi);
          }
          const Eigen::Vector2d expected =
              pivot + rot(obj.joint_value - g.joint_at_attach, g.ee_at_attach - pivot);
          broken = (ee - expected).norm() > kGraspBreakDistance;
          break;
        }
        case ObjectKind::free_body: {
          obj.position += ee - prev_ee;
          obj.joint_value =
              obj.clamp_joint(obj.axis_or_pivot.dot(obj.position - obj.anchor));
          break;
        }
      }
      if (broken) {
        s.grasp.reset();
        res.grasp_broken = true;
      }
    }

    s.arm_config = q;
    prev_ee = ee;
  }

  if (success && success(s)) {
    res.reward = 1.0;
    res.done = true;
  }
  return res;
}

}  // namespace lpr
