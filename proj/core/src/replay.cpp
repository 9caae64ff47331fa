#include "lpr/replay.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>

namespace lpr {

namespace {

bool never_done(const SceneState&) { return false; }

Path normalized_with_flag(const Path& raw, int path_len, const SceneState& scene,
                          bool gripper_closed) {
  Path p = normalize_path(raw, path_len);
  p.in_collision = path_in_collision(apply_gripper(scene, gripper_closed), p);
  return p;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (t.terminal && t.next_executed_path.has_value())
    throw std::invalid_argument("terminal transition carries a successor path");
  std::size_t slot;
  if (store_.size() < capacity_) {
    slot = store_.size();
    store_.push_back(std::move(t));
  } else {
    slot = next_slot_;
    const Transition& old = store_[slot];
    auto it = episode_slots_.find(old.episode_id);
    if (it != episode_slots_.end()) {
      auto& slots = it->second;
      slots.erase(std::remove(slots.begin(), slots.end(), slot), slots.end());
      if (slots.empty()) episode_slots_.erase(it);
    }
    if (old.episode_succeeded) --success_count_;
    store_[slot] = std::move(t);
  }
  next_slot_ = (slot + 1) % capacity_;
  episode_slots_[store_[slot].episode_id].push_back(slot);
  if (store_[slot].episode_succeeded) ++success_count_;
}

void ReplayBuffer::finish_episode(std::uint64_t episode_id, bool succeeded) {
  auto it = episode_slots_.find(episode_id);
  if (it == episode_slots_.end()) return;
  for (std::size_t slot : it->second) {
    Transition& t = store_[slot];
    if (t.episode_succeeded == succeeded) continue;
    t.episode_succeeded = succeeded;
    if (succeeded)
      ++success_count_;
    else
      --success_count_;
  }
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (store_.empty()) throw std::runtime_error("replay buffer is empty");
  std::uniform_int_distribution<std::size_t> pick(0, store_.size() - 1);
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&store_[pick(rng)]);
  return out;
}

std::vector<const Transition*> ReplayBuffer::sample_success(std::size_t n, Rng& rng,
                                                            double source_bias) const {
  std::vector<std::size_t> preferred, rest;
  for (std::size_t i = 0; i < store_.size(); ++i) {
    if (!store_[i].episode_succeeded) continue;
    const PathSource src = store_[i].executed_path.source;
    (src == PathSource::demo || src == PathSource::policy ? preferred : rest).push_back(i);
  }
  if (preferred.empty() && rest.empty())
    throw std::runtime_error("no success-tagged transitions to sample");
  std::bernoulli_distribution take_preferred(source_bias);
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::size_t>* pool = &preferred;
    if (preferred.empty() || (!rest.empty() && !take_preferred(rng))) pool = &rest;
    std::uniform_int_distribution<std::size_t> pick(0, pool->size() - 1);
    out.push_back(&store_[(*pool)[pick(rng)]]);
  }
  return out;
}

std::vector<DemoSegment> keyframe_discovery(const Demo& demo) {
  if (demo.steps.empty()) throw std::invalid_argument("demo has no steps");

  // Flatten the demo into one waypoint sequence. Each waypoint remembers the
  // gripper command in force while the arm travelled into it; consecutive
  // steps share their junction config, which is kept once.
  struct FlatPoint {
    JointConfig q;
    bool gripper;
  };
  std::vector<FlatPoint> flat;
  std::set<std::size_t> keys;
  for (std::size_t s = 0; s < demo.steps.size(); ++s) {
    const DemoStep& step = demo.steps[s];
    if (step.path.configs.size() < 2) throw std::invalid_argument("demo step path too short");
    std::size_t begin = 0;
    if (!flat.empty()) {
      const JointConfig& junction = flat.back().q;
      if ((step.path.configs.front() - junction).cwiseAbs().maxCoeff() <= 1e-12) begin = 1;
      if (step.gripper_closed != demo.steps[s - 1].gripper_closed)
        keys.insert(flat.size() - 1);
    }
    for (std::size_t i = begin; i < step.path.configs.size(); ++i)
      flat.push_back({step.path.configs[i], step.gripper_closed});
  }
  if (flat.size() < 2) throw std::invalid_argument("demo trajectory too short");

  // Low-speed onsets: the first waypoint where the end-effector drops below
  // the threshold after having moved. A long rest yields a single keyframe.
  std::vector<Eigen::Vector2d> pos(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i)
    pos[i] = forward_kinematics(demo.initial_scene.arm, flat[i].q).position;
  for (std::size_t i = 2; i < flat.size(); ++i) {
    const double speed = (pos[i] - pos[i - 1]).norm();
    const double prev = (pos[i - 1] - pos[i - 2]).norm();
    if (speed < kKeyframeSpeed && prev >= kKeyframeSpeed) keys.insert(i);
  }
  keys.insert(flat.size() - 1);
  keys.erase(0);

  std::vector<DemoSegment> segments;
  SceneState running = demo.initial_scene;
  std::size_t prev = 0;
  for (std::size_t k : keys) {
    if (k <= prev) continue;
    DemoSegment seg;
    seg.start_scene = running;
    seg.gripper_closed = flat[prev + 1].gripper;
    std::vector<JointConfig> cfgs;
    cfgs.reserve(k - prev + 1);
    for (std::size_t i = prev; i <= k; ++i) cfgs.push_back(flat[i].q);
    seg.path = make_path(std::move(cfgs), PathSource::demo);
    seg.path.in_collision =
        path_in_collision(apply_gripper(seg.start_scene, seg.gripper_closed), seg.path);
    seg.terminal = (k == flat.size() - 1);
    seg.reward = seg.terminal ? 1.0 : 0.0;
    EePose goal = forward_kinematics(demo.initial_scene.arm, flat[k].q);
    goal.gripper_closed = seg.gripper_closed;
    seg.goal = goal;
    running = execute_path(running, seg.path, seg.gripper_closed, never_done).scene;
    segments.push_back(std::move(seg));
    prev = k;
  }
  return segments;
}

std::vector<Transition> demo_augmentation(std::span<const DemoSegment> segments,
                                          int stride, int path_len) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (path_len < 2) throw std::invalid_argument("path_len must be >= 2");

  std::vector<Transition> out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const DemoSegment& seg = segments[i];
    const long len = static_cast<long>(seg.path.configs.size());

    std::optional<Path> next_path;
    std::optional<EePose> next_goal;
    if (!seg.terminal && i + 1 < segments.size()) {
      const DemoSegment& nxt = segments[i + 1];
      next_path = normalized_with_flag(nxt.path, path_len, nxt.start_scene, nxt.gripper_closed);
      next_goal = nxt.goal;
    }

    for (long j = stride; j + 1 < len; j += stride) {
      std::vector<JointConfig> prefix(seg.path.configs.begin(),
                                      seg.path.configs.begin() + j + 1);
      const SceneState at =
          execute_path(seg.start_scene, make_path(std::move(prefix), PathSource::demo),
                       seg.gripper_closed, never_done)
              .scene;
      std::vector<JointConfig> rest(seg.path.configs.begin() + j, seg.path.configs.end());
      const Path sub = normalized_with_flag(make_path(std::move(rest), PathSource::demo),
                                            path_len, at, seg.gripper_closed);

      Transition t;
      t.scene = at;
      t.goal = seg.goal;
      t.executed_path = sub;
      t.reward = seg.reward;
      t.next_scene = execute_path(at, sub, seg.gripper_closed, never_done).scene;
      if (!seg.terminal) {
        t.next_executed_path = next_path;
        t.next_goal = next_goal;
      }
      t.terminal = seg.terminal;
      t.episode_succeeded = true;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::size_t ingest_demo(ReplayBuffer& buffer, const Demo& demo, int stride, int path_len) {
  const std::vector<DemoSegment> segments = keyframe_discovery(demo);
  const std::uint64_t id = buffer.new_episode_id();
  std::size_t count = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const DemoSegment& seg = segments[i];
    Transition t;
    t.scene = seg.start_scene;
    t.goal = seg.goal;
    t.executed_path =
        normalized_with_flag(seg.path, path_len, seg.start_scene, seg.gripper_closed);
    t.reward = seg.reward;
    t.terminal = seg.terminal;
    if (!seg.terminal) {
      const DemoSegment& nxt = segments[i + 1];
      t.next_scene = nxt.start_scene;
      t.next_executed_path =
          normalized_with_flag(nxt.path, path_len, nxt.start_scene, nxt.gripper_closed);
      t.next_goal = nxt.goal;
    } else {
      t.next_scene =
          execute_path(seg.start_scene, seg.path, seg.gripper_closed, never_done).scene;
    }
    t.episode_id = id;
    t.episode_succeeded = true;
    buffer.push(std::move(t));
    ++count;
  }
  auto extra = demo_augmentation(segments, stride, path_len);
  for (Transition& t : extra) {
    t.episode_id = id;
    buffer.push(std::move(t));
    ++count;
  }
  buffer.finish_episode(id, true);
  return count;
}

}  // namespace lpr
