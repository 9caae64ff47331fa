#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "lpr/kinematics.hpp"

namespace lpr {

// Distance within which a closed gripper grabs a handle, and beyond which an
// established grasp slips off the object's constraint surface.
inline constexpr double kGraspRadius = 0.05;
inline constexpr double kGraspBreakDistance = 0.05;

struct Obstacle {
  enum class Kind { segment, circle };
  Kind kind{Kind::circle};
  Eigen::Vector2d a{0.0, 0.0};  // segment endpoint, or circle center
  Eigen::Vector2d b{0.0, 0.0};  // segment endpoint (unused for circles)
  double radius{0.0};           // circles only
};

// Segment/segment and segment/circle tests used for both static obstacles and
// articulated-object bodies.
bool segments_intersect(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                        const Eigen::Vector2d& q1, const Eigen::Vector2d& q2);
double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b);
bool segment_hits_obstacle(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                           const Obstacle& obs);

enum class ObjectKind { prismatic, revolute, free_body };

const char* to_string(ObjectKind k);

// One-DoF articulated object (drawer, lid) or a free-sliding body (block).
//
//   prismatic: handle = anchor + handle_offset + axis * joint_value
//   revolute:  handle = pivot + R(joint_value) * handle_offset, pivot = axis_or_pivot;
//              a negative joint_range opens clockwise
//   free_body: handle = position + handle_offset; joint_value is the progress
//              of position along axis from anchor and never constrains motion
struct ArticulatedObject {
  ObjectKind kind{ObjectKind::prismatic};
  Eigen::Vector2d anchor{0.0, 0.0};
  Eigen::Vector2d axis_or_pivot{1.0, 0.0};
  double joint_value{0.0};
  std::array<double, 2> joint_range{0.0, 1.0};
  Eigen::Vector2d handle_offset{0.0, 0.0};
  double success_threshold{0.0};
  double body_radius{0.0};                 // free bodies: collision circle
  Eigen::Vector2d position{0.0, 0.0};      // free bodies: current center

  Eigen::Vector2d handle_position() const;
  // Collision shapes of the body at the current joint value.
  std::vector<Obstacle> body_shapes() const;
  // True once joint_value has moved past success_threshold in the opening
  // direction (sign of the threshold).
  bool joint_past_threshold() const;
  double clamp_joint(double v) const;
  void validate() const;
};

// A rigid grasp: which object is held and where the end-effector sat on the
// constraint when it latched. Deviation from the surface beyond
// kGraspBreakDistance breaks the grasp.
struct Grasp {
  int object{-1};
  double joint_at_attach{0.0};
  Eigen::Vector2d ee_at_attach{0.0, 0.0};
};

struct SceneState {
  ArmSpec arm;
  JointConfig arm_config;
  bool gripper_closed{false};
  std::vector<Obstacle> obstacles;
  std::vector<ArticulatedObject> objects;
  std::optional<Grasp> grasp;

  EePose ee_pose() const;
  bool attached() const { return grasp.has_value(); }
};

// Arm links against static obstacles and all non-attached object bodies.
bool check_collision(const SceneState& scene, const JointConfig& q);

// True iff any waypoint config of the path fails check_collision; this is the
// definition of the candidate in_collision tag.
bool path_in_collision(const SceneState& scene, const Path& path);

using SuccessPredicate = std::function<bool(const SceneState&)>;

// Applies a gripper action to the scene: opening releases any grasp, closing
// latches onto the nearest handle within kGraspRadius (lowest object index on
// ties). This is the first thing execute_path does; generators use it too so
// collision tags match what execution will see.
SceneState apply_gripper(const SceneState& scene, bool gripper_closed);

struct StepResult {
  SceneState scene;
  double reward{0.0};
  bool done{false};
  bool grasp_broken{false};
  // Index of the last waypoint actually reached; configs past it were cut by a
  // static-obstacle collision. Equals path size - 1 when nothing was cut.
  int truncated_at{0};
};

// Executes a path waypoint by waypoint. The gripper action applies at the
// first waypoint only: opening releases any grasp, closing latches onto a
// handle within kGraspRadius. While attached, the object's joint follows the
// projection of end-effector motion onto its axis (prismatic), its angle about
// the pivot (revolute), or rigidly (free bodies); drifting more than
// kGraspBreakDistance off the constraint surface breaks the grasp and the rest
// of the path still executes. A waypoint colliding with a static obstacle
// truncates execution at the previous waypoint (object-body contact never
// truncates, so the arm can push). Reward is 1 with done=true iff `success`
// holds on the resulting scene.
StepResult execute_path(const SceneState& scene, const Path& path, bool gripper_closed,
                        const SuccessPredicate& success);

}  // namespace lpr
