#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>

#include "lpr/kinematics.hpp"
#include "lpr/net.hpp"
#include "lpr/world.hpp"

namespace lpr {

// Goal encoding shared by the path policy and the ranker: position, wrapped
// orientation on the unit circle, commanded gripper bit.
inline constexpr int kGoalEncodingDim = 5;
Eigen::VectorXd encode_goal(const EePose& goal);

// Policy input: start configuration followed by the goal encoding.
Eigen::VectorXd policy_input(const JointConfig& start, const EePose& goal);

// Behavior-cloned path generator: maps (start config, goal) to a flattened
// T x d waypoint matrix through hidden layers 64, 256, 256.
struct PathPolicy {
  NetParams net;
  AdamState adam;
  AdamParams opt;
  int dof = 0;
  int path_len = 0;

  static PathPolicy init(int dof, int path_len, std::uint64_t seed, double lr = 1e-3);
};

// Reshapes the net output to a path. The first config is overwritten with the
// scene's current configuration, every config is clamped to joint limits, and
// the collision flag is evaluated with the commanded gripper applied.
Path policy_predict(const PathPolicy& policy, const SceneState& scene, const EePose& goal);

// Row-major flattening of a path's configs into a T*d column vector.
Eigen::VectorXd flatten_path(const Path& path);

// One regression step on (input, flattened target path) columns. The loss is
// the batch mean of per-sample summed squared waypoint errors.
double policy_train_step(PathPolicy& policy, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& targets);

// Gate for including the policy path in the candidate set: its joint-space
// length must beat the mean length of the planner samples. Empty planner set
// rejects the candidate.
bool validity_filter(const Path& candidate, std::span<const Path> sampled_plans);

}  // namespace lpr
