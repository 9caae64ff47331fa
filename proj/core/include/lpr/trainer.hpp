#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpr/generators.hpp"
#include "lpr/policy.hpp"
#include "lpr/ranker.hpp"
#include "lpr/replay.hpp"
#include "lpr/tasks.hpp"

namespace lpr {

enum class AgentMode { lpr, baseline };

std::string to_string(AgentMode m);

struct TrainConfig {
  std::string task = "reach_target";
  AgentMode mode = AgentMode::lpr;
  int num_demos = 10;
  long total_env_steps = 2000;
  int gradient_steps_per_env_step = 1;
  int batch_size = 64;
  int path_len = 32;  // waypoints per candidate path
  PlannerConfig planner;
  BezierConfig bezier;
  bool use_policy = true;  // ablation switch for the policy candidate
  double gamma = 0.99;
  double tau = 0.005;
  double policy_lr = 1e-3;
  double ranker_lr = 1e-3;
  double epsilon_start = 0.2;
  double epsilon_end = 0.02;
  long epsilon_decay_steps = 1000;
  double goal_noise_std = 0.01;  // training-time goal jitter, metres/radians
  int augment_stride = 4;
  long eval_every = 250;
  int eval_episodes = 20;
  std::vector<std::uint64_t> seeds = {1, 2, 3};

  double epsilon_at(long env_step) const;
  void validate() const;  // throws std::invalid_argument naming the field
};

// Flat key=value config plumbing shared by the CLI and the run manifest.
struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(std::string k, const std::string& message)
      : std::runtime_error(message), key(std::move(k)) {}
};

std::map<std::string, std::string> parse_config_file(const std::filesystem::path& file);
TrainConfig config_from_map(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> config_to_map(const TrainConfig& cfg);

struct Agent {
  AgentMode mode = AgentMode::lpr;
  PathPolicy policy;
  RankerTrainer ranker;

  static Agent init(const TrainConfig& cfg, int dof, std::uint64_t seed);
  void save(const std::filesystem::path& file) const;
  static Agent load(const std::filesystem::path& file);
};

// Per-step ranking diagnostics for the rank-inspect command.
struct StepDiag {
  int env_step = 0;
  int stage = 0;
  std::vector<PathSource> sources;
  std::vector<double> q;
  int chosen = -1;
  bool explored = false;
  double reward = 0.0;
};

struct EpisodeResult {
  bool success = false;
  int steps = 0;
  std::vector<StepDiag> diags;
};

struct EvalStats {
  double success_rate = 0.0;
  double policy_chosen_frac = 0.0;
  double frac_planner = 0.0;
  double frac_bezier = 0.0;
};

// One metrics CSV row; columns in this order.
struct MetricsRow {
  long step = 0;
  double success_rate = 0.0;
  double policy_chosen_frac = 0.0;
  double frac_planner = 0.0;
  double frac_bezier = 0.0;
  double td_loss = 0.0;
  double bc_loss = 0.0;
  double ms_per_step = 0.0;
};

extern const char* const kMetricsHeader;
std::string metrics_to_csv(std::span<const MetricsRow> rows);

// Greedy policy rollout on one scene. epsilon > 0 gives the training
// behavior; buffer may be null for evaluation.
EpisodeResult run_episode(const TaskSpec& task, SceneState scene, Agent& agent,
                          const TrainConfig& cfg, ReplayBuffer* buffer, Rng& rng,
                          double epsilon, bool collect_diags, long env_step_base = 0);

// Greedy episodes on held-out scene seeds derived from master_seed.
EvalStats evaluate(const TaskSpec& task, Agent& agent, const TrainConfig& cfg,
                   std::uint64_t master_seed, int n_episodes);

struct SeedRunResult {
  std::vector<MetricsRow> metrics;
  double final_success_rate = 0.0;
};

// Full single-seed run: demo generation + ingestion, env/gradient loop,
// periodic evaluation, metrics CSV + checkpoint + demo files under run_dir.
SeedRunResult train_single_seed(const TrainConfig& cfg, std::uint64_t seed,
                                const std::filesystem::path& run_dir);

// All configured seeds under out_root/seed_<s>/, plus manifest.json.
std::vector<SeedRunResult> run_training(const TrainConfig& cfg,
                                        const std::filesystem::path& out_root);

void write_manifest(const TrainConfig& cfg, const std::filesystem::path& out_root);

// Diagnostic rollout with a trained agent; greedy selection.
std::vector<StepDiag> inspect_episodes(const TaskSpec& task, Agent& agent,
                                       const TrainConfig& cfg, std::uint64_t seed,
                                       int n_episodes);

}  // namespace lpr
