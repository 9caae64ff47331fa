#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace lpr {

using JointConfig = Eigen::VectorXd;

// Planar serial arm. Joint i rotates relative to link i-1; angles accumulate
// along the chain, so the end-effector orientation is the sum of all joints.
struct ArmSpec {
  std::vector<double> link_lengths;
  Eigen::Vector2d base_position{0.0, 0.0};
  std::vector<std::array<double, 2>> joint_limits;  // [lo, hi] per joint, radians

  int dof() const { return static_cast<int>(link_lengths.size()); }
  double max_reach() const;
  void validate() const;  // throws std::invalid_argument
  JointConfig clamp(const JointConfig& q) const;
  bool within_limits(const JointConfig& q, double tol = 1e-9) const;
};

struct EePose {
  Eigen::Vector2d position{0.0, 0.0};
  double orientation{0.0};  // radians, wrapped to (-pi, pi]
  bool gripper_closed{false};
};

enum class PathSource { planner, bezier, policy, demo };

const char* to_string(PathSource s);

struct Path {
  std::vector<JointConfig> configs;
  PathSource source{PathSource::planner};
  bool in_collision{false};
  double cspace_length{0.0};
};

// Wraps to (-pi, pi].
double wrap_angle(double a);

EePose forward_kinematics(const ArmSpec& arm, const JointConfig& q);

// Joint positions along the chain: base, joint1, ..., end-effector (dof+1 points).
std::vector<Eigen::Vector2d> link_points(const ArmSpec& arm, const JointConfig& q);

// Euclidean metric on configuration space (no angle wrapping; limits are a box).
double config_distance(const JointConfig& a, const JointConfig& b);

double path_length(std::span<const JointConfig> configs);

enum class IkStatus { ok, unreachable, no_convergence };

struct IkResult {
  IkStatus status{IkStatus::no_convergence};
  JointConfig config;
  double position_error{0.0};
  bool ok() const { return status == IkStatus::ok; }
};

struct IkParams {
  int max_restarts = 16;       // first attempt starts from the seed, rest are random
  int max_iterations = 150;    // damped least-squares iterations per attempt
  double position_tolerance = 1e-6;  // meters; well inside the 1e-4 contract
  double damping = 0.05;
  double orientation_weight = 0.1;
  double max_step = 0.5;       // per-iteration joint update clamp, radians
};

// Damped least-squares IK on (position, weighted orientation). Position error
// of a returned ok() result is <= params.position_tolerance. Reports
// unreachable when the target lies outside the annulus the arm can cover.
IkResult inverse_kinematics(const ArmSpec& arm, const EePose& target,
                            const JointConfig& seed, std::uint64_t rng_seed,
                            const IkParams& params = {});

// Resamples a path to exactly count waypoints, uniformly spaced by config-space
// arc length. Endpoints are preserved bit-exactly; source and in_collision
// carry over; cspace_length is recomputed on the resampled waypoints.
Path normalize_path(const Path& raw, int count);

// Builds a Path from waypoints, computing cspace_length. in_collision is left
// false; collision tagging is the world module's job.
Path make_path(std::vector<JointConfig> configs, PathSource source);

}  // namespace lpr
