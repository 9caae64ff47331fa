#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>

#include "lpr/kinematics.hpp"
#include "lpr/net.hpp"
#include "lpr/rng.hpp"
#include "lpr/world.hpp"

namespace lpr {

// Path ranking Q-function. Each waypoint config (concatenated with the goal
// encoding) passes through a shared per-config net (64, 128, 1024); features
// max-pool elementwise over the path's waypoints; the pooled vector plus the
// path's collision flag feed the scoring head (512, 512, 1).
struct RankerParams {
  NetParams per_config;  // (d + 5) -> 1024
  NetParams head;        // 1025 -> 1

  static RankerParams init(int dof, std::uint64_t seed);
};

double q_value(const RankerParams& r, const Path& path, const EePose& goal);
Eigen::VectorXd q_values(const RankerParams& r, std::span<const Path> paths,
                         const EePose& goal);

struct SelectResult {
  int index = -1;
  double q = 0.0;
  bool explored = false;  // true when the epsilon branch fired
};

// Epsilon-greedy over the candidate set; greedy ties break to the lowest
// index. Throws std::invalid_argument on an empty candidate set.
SelectResult select_path(const RankerParams& r, std::span<const Path> candidates,
                         const EePose& goal, double epsilon, Rng& rng);

// One TD sample. Pointers refer into caller-owned transitions; next_* are
// null exactly when the transition is terminal.
struct TdItem {
  const Path* path = nullptr;
  const EePose* goal = nullptr;
  double reward = 0.0;
  bool terminal = false;
  const Path* next_path = nullptr;
  const EePose* next_goal = nullptr;
};

struct RankerTrainer {
  RankerParams online;
  RankerParams target;
  AdamState adam_per_config;
  AdamState adam_head;
  AdamParams opt;
  double gamma = 0.99;
  double tau = 0.005;

  static RankerTrainer init(int dof, std::uint64_t seed, double lr = 1e-3,
                            double gamma = 0.99, double tau = 0.005);
};

// One gradient step on the mean squared one-step TD error
//   y = r                       (terminal)
//   y = r + gamma * Q_target(next_path, next_goal)
// followed by a soft target update. Returns the batch loss.
double ranker_train_step(RankerTrainer& trainer, std::span<const TdItem> batch);

}  // namespace lpr
