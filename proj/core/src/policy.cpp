#include "lpr/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lpr {

Eigen::VectorXd encode_goal(const EePose& goal) {
  Eigen::VectorXd g(kGoalEncodingDim);
  const double theta = wrap_angle(goal.orientation);
  g << goal.position.x(), goal.position.y(), std::cos(theta), std::sin(theta),
      goal.gripper_closed ? 1.0 : 0.0;
  return g;
}

Eigen::VectorXd policy_input(const JointConfig& start, const EePose& goal) {
  Eigen::VectorXd in(start.size() + kGoalEncodingDim);
  in << start, encode_goal(goal);
  return in;
}

PathPolicy PathPolicy::init(int dof, int path_len, std::uint64_t seed, double lr) {
  if (dof < 1 || path_len < 2) throw std::invalid_argument("bad policy dimensions");
  PathPolicy p;
  p.dof = dof;
  p.path_len = path_len;
  const std::vector<int> dims = {dof + kGoalEncodingDim, 64, 256, 256, path_len * dof};
  p.net = NetParams::xavier(dims, seed);
  p.adam = AdamState::zeros_like(p.net);
  p.opt.lr = lr;
  return p;
}

Path policy_predict(const PathPolicy& policy, const SceneState& scene, const EePose& goal) {
  const Eigen::VectorXd out = mlp_forward(policy.net, policy_input(scene.arm_config, goal));
  std::vector<JointConfig> configs;
  configs.reserve(policy.path_len);
  configs.push_back(scene.arm_config);
  for (int t = 1; t < policy.path_len; ++t)
    configs.push_back(scene.arm.clamp(out.segment(t * policy.dof, policy.dof)));
  Path p = make_path(std::move(configs), PathSource::policy);
  p.in_collision = path_in_collision(apply_gripper(scene, goal.gripper_closed), p);
  return p;
}

Eigen::VectorXd flatten_path(const Path& path) {
  if (path.configs.empty()) throw std::invalid_argument("cannot flatten an empty path");
  const int d = static_cast<int>(path.configs.front().size());
  Eigen::VectorXd flat(static_cast<int>(path.configs.size()) * d);
  for (std::size_t t = 0; t < path.configs.size(); ++t)
    flat.segment(static_cast<int>(t) * d, d) = path.configs[t];
  return flat;
}

double policy_train_step(PathPolicy& policy, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& targets) {
  if (inputs.cols() != targets.cols() || inputs.cols() == 0)
    throw std::invalid_argument("policy batch shape mismatch");
  const ForwardCache cache = mlp_forward_cached(policy.net, inputs);
  const Eigen::MatrixXd err = cache.output() - targets;
  const double n = static_cast<double>(inputs.cols());
  Gradients grads = Gradients::zeros_like(policy.net);
  mlp_backward(policy.net, cache, (2.0 / n) * err, grads);
  adam_step(policy.net, grads, policy.adam, policy.opt);
  return err.squaredNorm() / n;
}

bool validity_filter(const Path& candidate, std::span<const Path> sampled_plans) {
  if (sampled_plans.empty()) return false;
  double mean = 0.0;
  for (const Path& p : sampled_plans) mean += p.cspace_length;
  mean /= static_cast<double>(sampled_plans.size());
  return candidate.cspace_length < mean;
}

}  // namespace lpr
