#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lpr/serialize.hpp"
#include "lpr/trainer.hpp"

namespace fs = std::filesystem;

namespace {

fs::path output_root() {
  if (const char* env = std::getenv("LPR_OUT_DIR"); env && *env) return fs::path(env);
  return fs::path("runs");
}

const lpr::TaskSpec& require_task(const std::string& name) {
  const auto& names = lpr::task_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string msg = "unknown task '" + name + "'; valid tasks:";
    for (const auto& n : names) msg += " " + n;
    throw lpr::ConfigError("task", msg);
  }
  return lpr::get_task(name);
}

lpr::TrainConfig load_config(const std::string& config_path, const std::string& task_override) {
  lpr::TrainConfig cfg;
  if (!config_path.empty()) {
    if (!fs::exists(config_path)) {
      throw lpr::ConfigError("config", "missing config file: " + config_path);
    }
    cfg = lpr::config_from_map(lpr::parse_config_file(config_path));
  }
  if (!task_override.empty()) cfg.task = task_override;
  require_task(cfg.task);
  return cfg;
}

lpr::Agent load_agent(const std::string& checkpoint) {
  if (checkpoint.empty() || !fs::exists(checkpoint)) {
    throw lpr::ConfigError("checkpoint", "missing checkpoint: '" + checkpoint + "'");
  }
  return lpr::Agent::load(checkpoint);
}

int cmd_demo_gen(const std::string& task_name, int n, std::uint64_t seed, std::string out) {
  const lpr::TaskSpec& task = require_task(task_name);
  if (out.empty()) out = (output_root() / ("demos_" + task_name)).string();
  fs::create_directories(out);
  int written = 0;
  std::uint64_t attempt = 0;
  const std::uint64_t max_attempts = 20ull * static_cast<std::uint64_t>(n) + 20ull;
  while (written < n) {
    if (attempt >= max_attempts) {
      throw std::runtime_error("demo generation failed: " + std::to_string(written) + "/" +
                               std::to_string(n) + " demos after " + std::to_string(attempt) +
                               " attempts");
    }
    try {
      lpr::Demo demo = lpr::generate_demo(task, lpr::derive_seed(seed, 42, attempt));
      char name[32];
      std::snprintf(name, sizeof(name), "demo_%03d.json", written);
      lpr::save_demo(demo, (fs::path(out) / name).string());
      ++written;
    } catch (const lpr::DemoError&) {
    }
    ++attempt;
  }
  std::cout << "wrote " << written << " demos to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& task_override, std::string out) {
  lpr::TrainConfig cfg = load_config(config_path, task_override);
  if (out.empty()) {
    out = (output_root() / (cfg.task + "_" + lpr::to_string(cfg.mode))).string();
  }
  std::vector<lpr::SeedRunResult> results = lpr::run_training(cfg, out);
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::cout << "seed " << cfg.seeds[i] << ": final success_rate "
              << results[i].final_success_rate << "\n";
  }
  std::cout << "run directory: " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& task_name, int n,
             std::uint64_t seed, const std::string& config_path) {
  lpr::TrainConfig cfg = load_config(config_path, task_name);
  const lpr::TaskSpec& task = lpr::get_task(cfg.task);
  lpr::Agent agent = load_agent(checkpoint);
  std::cout << "episodes: " << n << "\n";
  if (n <= 0) return 0;
  lpr::EvalStats stats = lpr::evaluate(task, agent, cfg, seed, n);
  std::printf("success_rate: %.10g\n", stats.success_rate);
  std::printf("policy_chosen_frac: %.10g\n", stats.policy_chosen_frac);
  std::printf("frac_planner: %.10g\n", stats.frac_planner);
  std::printf("frac_bezier: %.10g\n", stats.frac_bezier);
  return 0;
}

int cmd_rank_inspect(const std::string& checkpoint, const std::string& task_name, int n,
                     std::uint64_t seed, const std::string& config_path) {
  lpr::TrainConfig cfg = load_config(config_path, task_name);
  const lpr::TaskSpec& task = lpr::get_task(cfg.task);
  lpr::Agent agent = load_agent(checkpoint);
  std::vector<lpr::StepDiag> diags = lpr::inspect_episodes(task, agent, cfg, seed, n);
  int policy_top = 0;
  for (const lpr::StepDiag& d : diags) {
    const char* chosen_source = d.chosen >= 0 ? lpr::to_string(d.sources[d.chosen]) : "none";
    std::printf("step %d stage %d chosen %d [%s]", d.env_step, d.stage, d.chosen, chosen_source);
    if (d.chosen >= 0 && !d.q.empty()) std::printf(" q %.6g", d.q[d.chosen]);
    std::printf("\n");
    for (std::size_t i = 0; i < d.sources.size(); ++i) {
      std::printf("  %2zu %-7s", i, lpr::to_string(d.sources[i]));
      if (i < d.q.size()) std::printf(" %.6g", d.q[i]);
      std::printf("%s\n", static_cast<int>(i) == d.chosen ? "  <- chosen" : "");
    }
    if (d.chosen >= 0 && d.sources[d.chosen] == lpr::PathSource::policy) ++policy_top;
  }
  std::printf("policy top-ranked in %d of %zu steps\n", policy_top, diags.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned path ranking workbench"};
  app.require_subcommand(1);

  std::string task;
  std::string config_path;
  std::string out;
  std::string checkpoint;
  std::uint64_t seed = 1;
  int n = 10;

  CLI::App* demo_gen = app.add_subcommand("demo-gen", "Generate scripted demonstration files");
  demo_gen->add_option("--task", task, "Task name")->required();
  demo_gen->add_option("--n", n, "Number of demos");
  demo_gen->add_option("--seed", seed, "Master seed");
  demo_gen->add_option("--out", out, "Output directory");

  CLI::App* train = app.add_subcommand("train", "Run training over the configured seeds");
  train->add_option("--config", config_path, "key=value config file")->required();
  train->add_option("--task", task, "Override the configured task");
  train->add_option("--out", out, "Run directory root");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "Agent checkpoint file")->required();
  eval_cmd->add_option("--task", task, "Task name")->required();
  eval_cmd->add_option("--n", n, "Evaluation episodes");
  eval_cmd->add_option("--seed", seed, "Held-out scene master seed");
  eval_cmd->add_option("--config", config_path, "key=value config file");

  CLI::App* inspect = app.add_subcommand("rank-inspect", "Dump per-step candidate rankings");
  inspect->add_option("--checkpoint", checkpoint, "Agent checkpoint file")->required();
  inspect->add_option("--task", task, "Task name")->required();
  inspect->add_option("--n", n, "Episodes to inspect");
  inspect->add_option("--seed", seed, "Scene master seed");
  inspect->add_option("--config", config_path, "key=value config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (demo_gen->parsed()) return cmd_demo_gen(task, n, seed, out);
    if (train->parsed()) return cmd_train(config_path, task, out);
    if (eval_cmd->parsed()) return cmd_eval(checkpoint, task, n, seed, config_path);
    if (inspect->parsed()) return cmd_rank_inspect(checkpoint, task, n, seed, config_path);
  } catch (const lpr::ConfigError& e) {
    std::cerr << "config error [" << e.key << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
