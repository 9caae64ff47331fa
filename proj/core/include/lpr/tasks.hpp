#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpr/world.hpp"

namespace lpr {

// A task bundles a seeded scene generator, a success predicate, and a scripted
// goal oracle that hands out one end-effector goal per stage (approach, then
// manipulate). Stages are indexed from 0; stage_for maps a live scene to the
// stage the agent should pursue next.
struct TaskSpec {
  std::string name;
  int num_stages{1};
  int max_steps{2};
  std::function<SceneState(std::uint64_t seed)> make_scene;
  SuccessPredicate success;
  // Throws std::out_of_range when stage >= num_stages.
  std::function<EePose(const SceneState&, int stage)> goal_oracle;
  std::function<int(const SceneState&)> stage_for;
};

// reach_target | push_block | open_drawer | open_lid; throws
// std::invalid_argument for anything else.
const TaskSpec& get_task(const std::string& name);
const std::vector<std::string>& task_names();

struct DemoStep {
  SceneState scene;   // scene the step started from
  EePose goal;        // oracle goal pursued
  Path path;          // executed waypoints (source = demo, normalized)
  bool gripper_closed{false};
  double reward{0.0};
};

struct Demo {
  std::string task;
  std::uint64_t seed{0};
  SceneState initial_scene;
  std::vector<DemoStep> steps;
};

struct DemoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scripted expert rollout on the seeded scene; throws DemoError when the
// script cannot produce a successful episode (bad IK draw, blocked approach).
Demo generate_demo(const TaskSpec& task, std::uint64_t seed, int waypoints_per_step = 32);

}  // namespace lpr
