#include "lpr/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "lpr/serialize.hpp"
#include "lpr/version.hpp"

namespace lpr {

namespace fs = std::filesystem;

std::string to_string(AgentMode m) {
  return m == AgentMode::lpr ? "lpr" : "baseline";
}

double TrainConfig::epsilon_at(long env_step) const {
  if (epsilon_decay_steps <= 0 || env_step >= epsilon_decay_steps) return epsilon_end;
  if (env_step <= 0) return epsilon_start;
  double f = static_cast<double>(env_step) / static_cast<double>(epsilon_decay_steps);
  return epsilon_start + (epsilon_end - epsilon_start) * f;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  const auto& names = task_names();
  if (std::find(names.begin(), names.end(), task) == names.end()) {
    std::string msg = "task: unknown task '" + task + "', valid tasks:";
    for (const auto& n : names) msg += " " + n;
    fail(msg);
  }
  if (num_demos < 0) fail("num_demos: must be >= 0");
  if (total_env_steps < 0) fail("total_env_steps: must be >= 0");
  if (gradient_steps_per_env_step < 0) fail("gradient_steps_per_env_step: must be >= 0");
  if (batch_size < 1) fail("batch_size: must be >= 1");
  if (path_len < 2) fail("path_len: must be >= 2");
  planner.validate();
  bezier.validate();
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma: must lie in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) fail("tau: must lie in (0, 1]");
  if (!(policy_lr > 0.0)) fail("policy_lr: must be > 0");
  if (!(ranker_lr > 0.0)) fail("ranker_lr: must be > 0");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0)) fail("epsilon_start: must lie in [0, 1]");
  if (!(epsilon_end >= 0.0 && epsilon_end <= 1.0)) fail("epsilon_end: must lie in [0, 1]");
  if (epsilon_decay_steps < 0) fail("epsilon_decay_steps: must be >= 0");
  if (!(goal_noise_std >= 0.0)) fail("goal_noise_std: must be >= 0");
  if (augment_stride < 1) fail("augment_stride: must be >= 1");
  if (eval_every < 1) fail("eval_every: must be >= 1");
  if (eval_episodes < 0) fail("eval_episodes: must be >= 0");
  if (seeds.empty()) fail("seeds: must list at least one seed");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

long parse_long_value(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    long out = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key, "invalid integer for " + key + ": '" + value + "'");
  }
}

int parse_int_value(const std::string& key, const std::string& value) {
  return static_cast<int>(parse_long_value(key, value));
}

double parse_double_value(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double out = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key, "invalid number for " + key + ": '" + value + "'");
  }
}

bool parse_bool_value(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key, "invalid boolean for " + key + ": '" + value +
                             "' (expected true/false)");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    try {
      std::size_t pos = 0;
      out.push_back(std::stoull(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(key, "invalid seed list entry for " + key + ": '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(key, "empty seed list for " + key);
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string(), "cannot open config file: " + file.string());
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, "malformed config line " + std::to_string(lineno) +
                                  " (expected key=value): '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(line, "missing key on config line " + std::to_string(lineno));
    }
    if (out.count(key)) throw ConfigError(key, "duplicate config key: " + key);
    out[key] = value;
  }
  return out;
}

TrainConfig config_from_map(const std::map<std::string, std::string>& kv) {
  TrainConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "task") {
      cfg.task = value;
    } else if (key == "mode") {
      if (value == "lpr") {
        cfg.mode = AgentMode::lpr;
      } else if (value == "baseline") {
        cfg.mode = AgentMode::baseline;
      } else {
        throw ConfigError(key, "invalid mode: '" + value + "' (expected lpr or baseline)");
      }
    } else if (key == "num_demos") {
      cfg.num_demos = parse_int_value(key, value);
    } else if (key == "total_env_steps") {
      cfg.total_env_steps = parse_long_value(key, value);
    } else if (key == "gradient_steps_per_env_step") {
      cfg.gradient_steps_per_env_step = parse_int_value(key, value);
    } else if (key == "batch_size") {
      cfg.batch_size = parse_int_value(key, value);
    } else if (key == "path_len") {
      cfg.path_len = parse_int_value(key, value);
    } else if (key == "planner_paths") {
      cfg.planner.M = parse_int_value(key, value);
    } else if (key == "planner_collision_free_fraction") {
      cfg.planner.collision_free_fraction = parse_double_value(key, value);
    } else if (key == "planner_step_size") {
      cfg.planner.step_size = parse_double_value(key, value);
    } else if (key == "planner_max_iterations") {
      cfg.planner.max_iterations = parse_int_value(key, value);
    } else if (key == "planner_goal_ik_attempts") {
      cfg.planner.goal_ik_attempts = parse_int_value(key, value);
    } else if (key == "planner_shortcut_attempts") {
      cfg.planner.shortcut_attempts = parse_int_value(key, value);
    } else if (key == "bezier_paths") {
      cfg.bezier.B = parse_int_value(key, value);
    } else if (key == "bezier_midpoint_std") {
      cfg.bezier.midpoint_std = parse_double_value(key, value);
    } else if (key == "use_policy") {
      cfg.use_policy = parse_bool_value(key, value);
    } else if (key == "gamma") {
      cfg.gamma = parse_double_value(key, value);
    } else if (key == "tau") {
      cfg.tau = parse_double_value(key, value);
    } else if (key == "policy_lr") {
      cfg.policy_lr = parse_double_value(key, value);
    } else if (key == "ranker_lr") {
      cfg.ranker_lr = parse_double_value(key, value);
    } else if (key == "epsilon_start") {
      cfg.epsilon_start = parse_double_value(key, value);
    } else if (key == "epsilon_end") {
      cfg.epsilon_end = parse_double_value(key, value);
    } else if (key == "epsilon_decay_steps") {
      cfg.epsilon_decay_steps = parse_long_value(key, value);
    } else if (key == "goal_noise_std") {
      cfg.goal_noise_std = parse_double_value(key, value);
    } else if (key == "augment_stride") {
      cfg.augment_stride = parse_int_value(key, value);
    } else if (key == "eval_every") {
      cfg.eval_every = parse_long_value(key, value);
    } else if (key == "eval_episodes") {
      cfg.eval_episodes = parse_int_value(key, value);
    } else if (key == "seeds") {
      cfg.seeds = parse_seed_list(key, value);
    } else {
      throw ConfigError(key, "unknown config key: " + key);
    }
  }
  cfg.validate();
  return cfg;
}

std::map<std::string, std::string> config_to_map(const TrainConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["task"] = cfg.task;
  kv["mode"] = to_string(cfg.mode);
  kv["num_demos"] = std::to_string(cfg.num_demos);
  kv["total_env_steps"] = std::to_string(cfg.total_env_steps);
  kv["gradient_steps_per_env_step"] = std::to_string(cfg.gradient_steps_per_env_step);
  kv["batch_size"] = std::to_string(cfg.batch_size);
  kv["path_len"] = std::to_string(cfg.path_len);
  kv["planner_paths"] = std::to_string(cfg.planner.M);
  kv["planner_collision_free_fraction"] = fmt_double(cfg.planner.collision_free_fraction);
  kv["planner_step_size"] = fmt_double(cfg.planner.step_size);
  kv["planner_max_iterations"] = std::to_string(cfg.planner.max_iterations);
  kv["planner_goal_ik_attempts"] = std::to_string(cfg.planner.goal_ik_attempts);
  kv["planner_shortcut_attempts"] = std::to_string(cfg.planner.shortcut_attempts);
  kv["bezier_paths"] = std::to_string(cfg.bezier.B);
  kv["bezier_midpoint_std"] = fmt_double(cfg.bezier.midpoint_std);
  kv["use_policy"] = cfg.use_policy ? "true" : "false";
  kv["gamma"] = fmt_double(cfg.gamma);
  kv["tau"] = fmt_double(cfg.tau);
  kv["policy_lr"] = fmt_double(cfg.policy_lr);
  kv["ranker_lr"] = fmt_double(cfg.ranker_lr);
  kv["epsilon_start"] = fmt_double(cfg.epsilon_start);
  kv["epsilon_end"] = fmt_double(cfg.epsilon_end);
  kv["epsilon_decay_steps"] = std::to_string(cfg.epsilon_decay_steps);
  kv["goal_noise_std"] = fmt_double(cfg.goal_noise_std);
  kv["augment_stride"] = std::to_string(cfg.augment_stride);
  kv["eval_every"] = std::to_string(cfg.eval_every);
  kv["eval_episodes"] = std::to_string(cfg.eval_episodes);
  kv["seeds"] = join_seeds(cfg.seeds);
  return kv;
}

namespace {

constexpr std::uint32_t kAgentMagic = 0x4c414754;  // "TGAL" little-endian

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::int64_t read_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

Agent Agent::init(const TrainConfig& cfg, int dof, std::uint64_t seed) {
  Agent a;
  a.mode = cfg.mode;
  a.policy = PathPolicy::init(dof, cfg.path_len, derive_seed(seed, 51), cfg.policy_lr);
  a.ranker = RankerTrainer::init(dof, derive_seed(seed, 52), cfg.ranker_lr, cfg.gamma, cfg.tau);
  return a;
}

void Agent::save(const fs::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open agent file for writing: " + file.string());
  write_u32(out, kAgentMagic);
  write_u32(out, mode == AgentMode::lpr ? 0u : 1u);
  write_i64(out, policy.dof);
  write_i64(out, policy.path_len);
  write_net(out, policy.net);
  write_adam(out, policy.adam);
  write_f64(out, policy.opt.lr);
  write_net(out, ranker.online.per_config);
  write_net(out, ranker.online.head);
  write_net(out, ranker.target.per_config);
  write_net(out, ranker.target.head);
  write_adam(out, ranker.adam_per_config);
  write_adam(out, ranker.adam_head);
  write_f64(out, ranker.opt.lr);
  write_f64(out, ranker.gamma);
  write_f64(out, ranker.tau);
  if (!out) throw std::runtime_error("short write to agent file: " + file.string());
}

Agent Agent::load(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open agent file: " + file.string());
  if (read_u32(in) != kAgentMagic) {
    throw std::runtime_error("not an agent checkpoint: " + file.string());
  }
  Agent a;
  a.mode = read_u32(in) == 0 ? AgentMode::lpr : AgentMode::baseline;
  a.policy.dof = static_cast<int>(read_i64(in));
  a.policy.path_len = static_cast<int>(read_i64(in));
  a.policy.net = read_net(in);
  a.policy.adam = read_adam(in);
  a.policy.opt.lr = read_f64(in);
  a.ranker.online.per_config = read_net(in);
  a.ranker.online.head = read_net(in);
  a.ranker.target.per_config = read_net(in);
  a.ranker.target.head = read_net(in);
  a.ranker.adam_per_config = read_adam(in);
  a.ranker.adam_head = read_adam(in);
  a.ranker.opt.lr = read_f64(in);
  a.ranker.gamma = read_f64(in);
  a.ranker.tau = read_f64(in);
  if (!in) throw std::runtime_error("truncated agent checkpoint: " + file.string());
  return a;
}

const char* const kMetricsHeader =
    "step,success_rate,policy_chosen_frac,frac_planner,frac_bezier,td_loss,bc_loss,ms_per_step";

std::string metrics_to_csv(std::span<const MetricsRow> rows) {
  std::string out = kMetricsHeader;
  out += '\n';
  char buf[256];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.step,
                  r.success_rate, r.policy_chosen_frac, r.frac_planner, r.frac_bezier, r.td_loss,
                  r.bc_loss, r.ms_per_step);
    out += buf;
  }
  return out;
}

namespace {

// Candidate order is fixed: planner paths, then Bezier paths, then the policy
// path when it beats the mean planner length. Baseline mode plans every slot
// with collision checking on and uses no other generator.
std::vector<Path> build_candidates(const SceneState& scene, const EePose& goal, Agent& agent,
                                   const TrainConfig& cfg, Rng& rng) {
  if (agent.mode == AgentMode::baseline) {
    PlannerConfig pc = cfg.planner;
    pc.collision_free_fraction = 1.0;
    std::uint64_t plan_seed = rng();
    return sample_plans(scene, goal, pc, plan_seed, cfg.path_len);
  }
  std::uint64_t plan_seed = rng();
  std::uint64_t bezier_seed = rng();
  std::vector<Path> plans = sample_plans(scene, goal, cfg.planner, plan_seed, cfg.path_len);
  std::vector<Path> out = plans;
  std::vector<Path> beziers = sample_beziers(scene, goal, cfg.bezier, bezier_seed, cfg.path_len);
  out.insert(out.end(), std::make_move_iterator(beziers.begin()),
             std::make_move_iterator(beziers.end()));
  if (cfg.use_policy) {
    Path p = policy_predict(agent.policy, scene, goal);
    if (validity_filter(p, plans)) out.push_back(std::move(p));
  }
  return out;
}

// Shortest collision-free candidate; falls back to the shortest overall when
// every path is flagged.
int shortest_free_index(std::span<const Path> candidates) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    if (candidates[i].in_collision) continue;
    if (best < 0 || candidates[i].cspace_length < candidates[best].cspace_length) best = i;
  }
  if (best >= 0) return best;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    if (best < 0 || candidates[i].cspace_length < candidates[best].cspace_length) best = i;
  }
  return best;
}

EePose jitter_goal(const EePose& goal, double std_dev, Rng& rng) {
  if (std_dev <= 0.0) return goal;
  std::normal_distribution<double> noise(0.0, std_dev);
  EePose out = goal;
  out.position.x() += noise(rng);
  out.position.y() += noise(rng);
  out.orientation = wrap_angle(out.orientation + noise(rng));
  return out;
}

}  // namespace

EpisodeResult run_episode(const TaskSpec& task, SceneState scene, Agent& agent,
                          const TrainConfig& cfg, ReplayBuffer* buffer, Rng& rng, double epsilon,
                          bool collect_diags, long env_step_base) {
  EpisodeResult result;
  const std::uint64_t episode_id = buffer ? buffer->new_episode_id() : 0;
  std::optional<Transition> pending;

  for (int step = 0; step < task.max_steps; ++step) {
    const int stage = task.stage_for(scene);
    EePose goal = task.goal_oracle(scene, stage);
    if (buffer) goal = jitter_goal(goal, cfg.goal_noise_std, rng);

    std::vector<Path> candidates = build_candidates(scene, goal, agent, cfg, rng);
    if (candidates.empty()) {
      std::cerr << "[lpr] episode ended: no candidate paths (task " << task.name << ", stage "
                << stage << ")\n";
      break;
    }

    SelectResult sel;
    if (agent.mode == AgentMode::baseline) {
      sel.index = shortest_free_index(candidates);
      sel.q = 0.0;
      sel.explored = false;
    } else {
      sel = select_path(agent.ranker.online, candidates, goal, epsilon, rng);
    }

    StepDiag diag;
    diag.env_step = static_cast<int>(env_step_base) + result.steps;
    diag.stage = stage;
    diag.sources.reserve(candidates.size());
    for (const Path& p : candidates) diag.sources.push_back(p.source);
    if (collect_diags && agent.mode == AgentMode::lpr) {
      Eigen::VectorXd q = q_values(agent.ranker.online, candidates, goal);
      diag.q.assign(q.data(), q.data() + q.size());
    }
    diag.chosen = sel.index;
    diag.explored = sel.explored;

    StepResult res = execute_path(scene, candidates[sel.index], goal.gripper_closed, task.success);
    diag.reward = res.reward;
    result.diags.push_back(std::move(diag));

    if (buffer) {
      if (pending) {
        pending->next_executed_path = candidates[sel.index];
        pending->next_goal = goal;
        buffer->push(std::move(*pending));
        pending.reset();
      }
      Transition t;
      t.scene = scene;
      t.goal = goal;
      t.executed_path = candidates[sel.index];
      t.reward = res.reward;
      t.next_scene = res.scene;
      t.terminal = res.done;
      t.episode_id = episode_id;
      if (res.done) {
        buffer->push(std::move(t));
      } else {
        pending = std::move(t);
      }
    }

    scene = std::move(res.scene);
    ++result.steps;
    if (res.done) {
      result.success = true;
      break;
    }
  }

  if (buffer) {
    // An episode cut off by the step budget (or by an empty candidate set)
    // bootstraps nothing: its last stored transition becomes terminal.
    if (pending) {
      pending->terminal = true;
      buffer->push(std::move(*pending));
    }
    buffer->finish_episode(episode_id, result.success);
  }
  return result;
}

EvalStats evaluate(const TaskSpec& task, Agent& agent, const TrainConfig& cfg,
                   std::uint64_t master_seed, int n_episodes) {
  EvalStats stats;
  if (n_episodes <= 0) return stats;
  long successes = 0;
  long total_steps = 0;
  long chosen_policy = 0;
  long chosen_planner = 0;
  long chosen_bezier = 0;
  for (int i = 0; i < n_episodes; ++i) {
    SceneState scene = task.make_scene(derive_seed(master_seed, 11, static_cast<std::uint64_t>(i)));
    Rng rng = make_rng(master_seed, 12, static_cast<std::uint64_t>(i));
    EpisodeResult ep = run_episode(task, std::move(scene), agent, cfg, nullptr, rng, 0.0, false);
    if (ep.success) ++successes;
    for (const StepDiag& d : ep.diags) {
      if (d.chosen < 0) continue;
      ++total_steps;
      switch (d.sources[d.chosen]) {
        case PathSource::planner: ++chosen_planner; break;
        case PathSource::bezier: ++chosen_bezier; break;
        case PathSource::policy: ++chosen_policy; break;
        case PathSource::demo: break;
      }
    }
  }
  stats.success_rate = static_cast<double>(successes) / n_episodes;
  if (total_steps > 0) {
    stats.policy_chosen_frac = static_cast<double>(chosen_policy) / total_steps;
    stats.frac_planner = static_cast<double>(chosen_planner) / total_steps;
    stats.frac_bezier = static_cast<double>(chosen_bezier) / total_steps;
  }
  return stats;
}

namespace {

void write_text_file(const fs::path& file, const std::string& content) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + file.string());
  out << content;
}

std::string config_snapshot(const TrainConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : config_to_map(cfg)) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

// Demo seeds advance past DemoError draws until the quota is met; the scripted
// expert legitimately fails on a small share of scenes.
std::vector<Demo> collect_demos(const TaskSpec& task, const TrainConfig& cfg,
                                std::uint64_t seed) {
  std::vector<Demo> demos;
  demos.reserve(cfg.num_demos);
  const std::uint64_t max_attempts = 20ull * static_cast<std::uint64_t>(cfg.num_demos) + 20ull;
  std::uint64_t attempt = 0;
  while (static_cast<int>(demos.size()) < cfg.num_demos) {
    if (attempt >= max_attempts) {
      throw std::runtime_error("demo generation failed: " + std::to_string(demos.size()) + "/" +
                               std::to_string(cfg.num_demos) + " demos after " +
                               std::to_string(attempt) + " attempts on task " + cfg.task);
    }
    try {
      demos.push_back(generate_demo(task, derive_seed(seed, 42, attempt), cfg.path_len));
    } catch (const DemoError&) {
    }
    ++attempt;
  }
  return demos;
}

struct LossAccumulator {
  double sum = 0.0;
  long n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double mean_and_reset() {
    double m = n > 0 ? sum / n : 0.0;
    sum = 0.0;
    n = 0;
    return m;
  }
};

void gradient_phase(Agent& agent, ReplayBuffer& buffer, const TrainConfig& cfg, Rng& rng,
                    long steps, LossAccumulator& td, LossAccumulator& bc) {
  for (long g = 0; g < steps; ++g) {
    if (cfg.use_policy && buffer.success_count() > 0) {
      std::vector<const Transition*> batch =
          buffer.sample_success(static_cast<std::size_t>(cfg.batch_size), rng);
      const int in_dim = agent.policy.dof + kGoalEncodingDim;
      const int out_dim = agent.policy.path_len * agent.policy.dof;
      Eigen::MatrixXd inputs(in_dim, static_cast<int>(batch.size()));
      Eigen::MatrixXd targets(out_dim, static_cast<int>(batch.size()));
      for (int i = 0; i < static_cast<int>(batch.size()); ++i) {
        inputs.col(i) = policy_input(batch[i]->scene.arm_config, batch[i]->goal);
        targets.col(i) = flatten_path(batch[i]->executed_path);
      }
      bc.add(policy_train_step(agent.policy, inputs, targets));
    }
    if (buffer.size() > 0) {
      std::vector<const Transition*> batch =
          buffer.sample(static_cast<std::size_t>(cfg.batch_size), rng);
      std::vector<TdItem> items(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition* t = batch[i];
        items[i].path = &t->executed_path;
        items[i].goal = &t->goal;
        items[i].reward = t->reward;
        items[i].terminal = t->terminal;
        items[i].next_path = t->next_executed_path ? &*t->next_executed_path : nullptr;
        items[i].next_goal = t->next_goal ? &*t->next_goal : nullptr;
      }
      td.add(ranker_train_step(agent.ranker, items));
    }
  }
}

}  // namespace

SeedRunResult train_single_seed(const TrainConfig& cfg, std::uint64_t seed,
                                const fs::path& run_dir) {
  cfg.validate();
  const TaskSpec& task = get_task(cfg.task);
  fs::create_directories(run_dir / "demos");
  write_text_file(run_dir / "config.cfg", config_snapshot(cfg));

  const SceneState probe = task.make_scene(derive_seed(seed, 41));
  Agent agent = Agent::init(cfg, probe.arm.dof(), seed);
  const bool learning = cfg.mode == AgentMode::lpr;

  ReplayBuffer buffer;
  if (learning && cfg.num_demos > 0) {
    std::vector<Demo> demos = collect_demos(task, cfg, seed);
    for (std::size_t i = 0; i < demos.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "demo_%03zu.json", i);
      save_demo(demos[i], (run_dir / "demos" / name).string());
      ingest_demo(buffer, demos[i], cfg.augment_stride, cfg.path_len);
    }
  }

  Rng env_rng = make_rng(seed, 43);
  Rng grad_rng = make_rng(seed, 44);
  const std::uint64_t eval_master = derive_seed(seed, 45);

  std::vector<MetricsRow> rows;
  LossAccumulator td;
  LossAccumulator bc;
  double env_ms = 0.0;
  long env_ms_steps = 0;

  auto emit_row = [&](long step) {
    EvalStats ev = evaluate(task, agent, cfg, eval_master, cfg.eval_episodes);
    MetricsRow row;
    row.step = step;
    row.success_rate = ev.success_rate;
    row.policy_chosen_frac = ev.policy_chosen_frac;
    row.frac_planner = ev.frac_planner;
    row.frac_bezier = ev.frac_bezier;
    row.td_loss = td.mean_and_reset();
    row.bc_loss = bc.mean_and_reset();
    row.ms_per_step = env_ms_steps > 0 ? env_ms / env_ms_steps : 0.0;
    env_ms = 0.0;
    env_ms_steps = 0;
    rows.push_back(row);
    agent.save(run_dir / "checkpoint.bin");
  };

  emit_row(0);

  long env_step = 0;
  long next_eval = cfg.eval_every;
  std::uint64_t episode = 0;
  int consecutive_empty = 0;
  while (env_step < cfg.total_env_steps) {
    SceneState scene = task.make_scene(derive_seed(seed, 46, episode));
    ++episode;
    const double eps = learning ? cfg.epsilon_at(env_step) : 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    EpisodeResult ep = run_episode(task, std::move(scene), agent, cfg,
                                   learning ? &buffer : nullptr, env_rng, eps, false, env_step);
    const auto t1 = std::chrono::steady_clock::now();
    if (ep.steps == 0) {
      if (++consecutive_empty >= 200) {
        throw std::runtime_error("candidate generation failed on 200 consecutive episodes, task " +
                                 cfg.task);
      }
      continue;
    }
    consecutive_empty = 0;
    env_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
    env_ms_steps += ep.steps;
    env_step += ep.steps;
    if (learning) {
      gradient_phase(agent, buffer, cfg, grad_rng,
                     static_cast<long>(ep.steps) * cfg.gradient_steps_per_env_step, td, bc);
    }
    if (env_step >= next_eval) {
      emit_row(env_step);
      next_eval = (env_step / cfg.eval_every + 1) * cfg.eval_every;
    }
  }
  if (rows.back().step != env_step) emit_row(env_step);

  write_text_file(run_dir / "metrics.csv", metrics_to_csv(rows));

  SeedRunResult result;
  result.final_success_rate = rows.back().success_rate;
  result.metrics = std::move(rows);
  return result;
}

std::vector<SeedRunResult> run_training(const TrainConfig& cfg, const fs::path& out_root) {
  cfg.validate();
  fs::create_directories(out_root);
  std::vector<SeedRunResult> results;
  results.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds) {
    results.push_back(train_single_seed(cfg, seed, out_root / ("seed_" + std::to_string(seed))));
  }
  write_manifest(cfg, out_root);
  return results;
}

void write_manifest(const TrainConfig& cfg, const fs::path& out_root) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["source_hash"] = kSourceHash;
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [key, value] : config_to_map(cfg)) c[key] = value;
  j["config"] = c;
  j["seeds"] = cfg.seeds;
  nlohmann::json dirs = nlohmann::json::array();
  for (std::uint64_t seed : cfg.seeds) dirs.push_back("seed_" + std::to_string(seed));
  j["seed_dirs"] = dirs;
  fs::create_directories(out_root);
  write_text_file(out_root / "manifest.json", j.dump(2) + "\n");
}

std::vector<StepDiag> inspect_episodes(const TaskSpec& task, Agent& agent, const TrainConfig& cfg,
                                       std::uint64_t seed, int n_episodes) {
  std::vector<StepDiag> diags;
  long step_base = 0;
  for (int i = 0; i < n_episodes; ++i) {
    SceneState scene = task.make_scene(derive_seed(seed, 21, static_cast<std::uint64_t>(i)));
    Rng rng = make_rng(seed, 22, static_cast<std::uint64_t>(i));
    EpisodeResult ep =
        run_episode(task, std::move(scene), agent, cfg, nullptr, rng, 0.0, true, step_base);
    step_base += ep.steps;
    for (StepDiag& d : ep.diags) diags.push_back(std::move(d));
  }
  return diags;
}

}  // namespace lpr
