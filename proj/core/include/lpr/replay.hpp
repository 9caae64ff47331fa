#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "lpr/kinematics.hpp"
#include "lpr/rng.hpp"
#include "lpr/tasks.hpp"
#include "lpr/world.hpp"

namespace lpr {

struct Transition {
  SceneState scene;
  EePose goal;
  Path executed_path;  // the selected candidate
  double reward = 0.0;
  SceneState next_scene;
  std::optional<Path> next_executed_path;  // absent iff terminal
  std::optional<EePose> next_goal;
  bool terminal = false;
  std::uint64_t episode_id = 0;
  bool episode_succeeded = false;  // back-filled by finish_episode
};

// Ring buffer with uniform replacement sampling. Single writer; sampling is
// read-only and safe between writes.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 100000);

  std::uint64_t new_episode_id() { return next_episode_id_++; }
  void push(Transition t);
  // Tags every still-buffered transition of the episode.
  void finish_episode(std::uint64_t episode_id, bool succeeded);

  std::size_t size() const { return store_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return store_[i]; }
  std::size_t success_count() const { return success_count_; }

  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;
  // Success-tagged transitions only. Throws std::runtime_error when none
  // exist. Each draw lands on a demo- or policy-sourced path with probability
  // source_bias when both kinds are present; planner/bezier paths solving the
  // same goal spread across IK branches, and regressing onto that mixture
  // averages badly.
  std::vector<const Transition*> sample_success(std::size_t n, Rng& rng,
                                                double source_bias = 0.8) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> store_;
  std::size_t next_slot_ = 0;
  std::uint64_t next_episode_id_ = 1;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> episode_slots_;
  std::size_t success_count_ = 0;
};

// One inter-keyframe slice of a demonstration.
struct DemoSegment {
  SceneState start_scene;
  EePose goal;  // FK pose at the keyframe, gripper bit = segment gripper
  Path path;    // raw waypoints, start scene's config first
  bool gripper_closed = false;
  double reward = 0.0;
  bool terminal = false;
};

// Splits a demo at keyframes: waypoints where the gripper toggles or the
// end-effector speed first drops below the threshold, plus the final
// waypoint. Segment goals are the keyframe poses.
inline constexpr double kKeyframeSpeed = 1e-3;  // metres per waypoint step
std::vector<DemoSegment> keyframe_discovery(const Demo& demo);

// Extra transitions from intermediate segment waypoints: every stride-th
// waypoint becomes a fresh start whose executed path is the remaining
// sub-path, re-normalized to path_len. All tagged episode_succeeded.
std::vector<Transition> demo_augmentation(std::span<const DemoSegment> segments,
                                          int stride, int path_len);

// Keyframe discovery + augmentation, pushed as one finished successful
// episode. Returns the number of transitions added.
std::size_t ingest_demo(ReplayBuffer& buffer, const Demo& demo, int stride,
                        int path_len);

}  // namespace lpr
