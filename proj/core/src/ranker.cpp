#include "lpr/ranker.hpp"

#include <random>
#include <stdexcept>
#include <vector>

#include "lpr/policy.hpp"

namespace lpr {

namespace {

// Waypoint columns of every path side by side, each concatenated with its
// path's goal encoding, so one GEMM covers the whole candidate set.
struct StackedInputs {
  Eigen::MatrixXd columns;
  std::vector<int> offset;
  std::vector<int> count;
};

StackedInputs stack_inputs(std::span<const Path* const> paths,
                           std::span<const EePose* const> goals) {
  int total = 0;
  for (const Path* p : paths) {
    if (p == nullptr || p->configs.empty())
      throw std::invalid_argument("ranker got an empty path");
    total += static_cast<int>(p->configs.size());
  }
  const int dof = static_cast<int>(paths.front()->configs.front().size());

  StackedInputs s;
  s.columns.resize(dof + kGoalEncodingDim, total);
  s.offset.reserve(paths.size());
  s.count.reserve(paths.size());
  int col = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const Eigen::VectorXd g = encode_goal(*goals[i]);
    s.offset.push_back(col);
    s.count.push_back(static_cast<int>(paths[i]->configs.size()));
    for (const JointConfig& q : paths[i]->configs) {
      s.columns.col(col).head(dof) = q;
      s.columns.col(col).tail(kGoalEncodingDim) = g;
      ++col;
    }
  }
  return s;
}

// Pooled per-path features plus the collision flag row. argmax (one entry per
// feature row and path) records which waypoint column won the pool, for
// routing gradients back.
Eigen::MatrixXd pool_features(const Eigen::MatrixXd& features, const StackedInputs& s,
                              std::span<const Path* const> paths,
                              std::vector<Eigen::VectorXi>* argmax) {
  Eigen::MatrixXd head_in(features.rows() + 1, static_cast<int>(paths.size()));
  for (std::size_t i = 0; i < paths.size(); ++i) {
    Eigen::VectorXi am;
    const Eigen::MatrixXd block = features.middleCols(s.offset[i], s.count[i]);
    head_in.col(static_cast<int>(i)).head(features.rows()) = max_pool_columns(block, am);
    head_in(features.rows(), static_cast<int>(i)) = paths[i]->in_collision ? 1.0 : 0.0;
    if (argmax) argmax->push_back(std::move(am));
  }
  return head_in;
}

Eigen::VectorXd score(const RankerParams& r, std::span<const Path* const> paths,
                      std::span<const EePose* const> goals) {
  const StackedInputs s = stack_inputs(paths, goals);
  const Eigen::MatrixXd features = mlp_forward(r.per_config, s.columns);
  const Eigen::MatrixXd head_in = pool_features(features, s, paths, nullptr);
  return mlp_forward(r.head, head_in).transpose();
}

}  // namespace

RankerParams RankerParams::init(int dof, std::uint64_t seed) {
  if (dof < 1) throw std::invalid_argument("bad ranker dof");
  RankerParams r;
  const std::vector<int> per_config_dims = {dof + kGoalEncodingDim, 64, 128, 1024};
  const std::vector<int> head_dims = {1024 + 1, 512, 512, 1};
  r.per_config = NetParams::xavier(per_config_dims, derive_seed(seed, 0));
  r.head = NetParams::xavier(head_dims, derive_seed(seed, 1));
  return r;
}

double q_value(const RankerParams& r, const Path& path, const EePose& goal) {
  const Path* p = &path;
  const EePose* g = &goal;
  return score(r, {&p, 1}, {&g, 1})(0);
}

Eigen::VectorXd q_values(const RankerParams& r, std::span<const Path> paths,
                         const EePose& goal) {
  if (paths.empty()) return Eigen::VectorXd();
  std::vector<const Path*> ps;
  std::vector<const EePose*> gs(paths.size(), &goal);
  ps.reserve(paths.size());
  for (const Path& p : paths) ps.push_back(&p);
  return score(r, ps, gs);
}

SelectResult select_path(const RankerParams& r, std::span<const Path> candidates,
                         const EePose& goal, double epsilon, Rng& rng) {
  if (candidates.empty()) throw std::invalid_argument("select_path: no candidates");
  const Eigen::VectorXd q = q_values(r, candidates, goal);

  SelectResult res;
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(candidates.size()) - 1);
      res.index = pick(rng);
      res.q = q(res.index);
      res.explored = true;
      return res;
    }
  }
  res.index = 0;
  for (int i = 1; i < q.size(); ++i)
    if (q(i) > q(res.index)) res.index = i;
  res.q = q(res.index);
  return res;
}

RankerTrainer RankerTrainer::init(int dof, std::uint64_t seed, double lr, double gamma,
                                  double tau) {
  RankerTrainer t;
  t.online = RankerParams::init(dof, seed);
  t.target = t.online;
  t.adam_per_config = AdamState::zeros_like(t.online.per_config);
  t.adam_head = AdamState::zeros_like(t.online.head);
  t.opt.lr = lr;
  t.gamma = gamma;
  t.tau = tau;
  return t;
}

double ranker_train_step(RankerTrainer& trainer, std::span<const TdItem> batch) {
  if (batch.empty()) throw std::invalid_argument("ranker_train_step: empty batch");
  const int n = static_cast<int>(batch.size());

  std::vector<const Path*> paths(batch.size());
  std::vector<const EePose*> goals(batch.size());
  std::vector<const Path*> next_paths;
  std::vector<const EePose*> next_goals;
  std::vector<int> next_slot(batch.size(), -1);
  for (int i = 0; i < n; ++i) {
    const TdItem& item = batch[i];
    if (item.path == nullptr || item.goal == nullptr)
      throw std::invalid_argument("ranker_train_step: null path or goal");
    if (!item.terminal && (item.next_path == nullptr || item.next_goal == nullptr))
      throw std::invalid_argument("ranker_train_step: non-terminal item lacks successor");
    paths[i] = item.path;
    goals[i] = item.goal;
    if (!item.terminal) {
      next_slot[i] = static_cast<int>(next_paths.size());
      next_paths.push_back(item.next_path);
      next_goals.push_back(item.next_goal);
    }
  }

  Eigen::VectorXd next_q;
  if (!next_paths.empty()) next_q = score(trainer.target, next_paths, next_goals);

  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y(i) = batch[i].reward +
           (next_slot[i] >= 0 ? trainer.gamma * next_q(next_slot[i]) : 0.0);

  const StackedInputs s = stack_inputs(paths, goals);
  ForwardCache pc_cache = mlp_forward_cached(trainer.online.per_config, s.columns);
  std::vector<Eigen::VectorXi> argmax;
  argmax.reserve(batch.size());
  const Eigen::MatrixXd head_in = pool_features(pc_cache.output(), s, paths, &argmax);
  ForwardCache head_cache = mlp_forward_cached(trainer.online.head, head_in);

  const Eigen::VectorXd q = head_cache.output().transpose();
  const Eigen::VectorXd err = q - y;
  const double loss = err.squaredNorm() / n;

  Gradients head_grads = Gradients::zeros_like(trainer.online.head);
  const Eigen::MatrixXd dhead_in = mlp_backward(
      trainer.online.head, head_cache, (2.0 / n) * err.transpose(), head_grads);

  // Max-pool routing: each pooled feature's gradient lands on the waypoint
  // column that attained the max; the flag row has no parameters upstream.
  const int fdim = static_cast<int>(pc_cache.output().rows());
  Eigen::MatrixXd dfeatures = Eigen::MatrixXd::Zero(fdim, s.columns.cols());
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < fdim; ++r)
      dfeatures(r, s.offset[i] + argmax[i](r)) += dhead_in(r, i);

  Gradients pc_grads = Gradients::zeros_like(trainer.online.per_config);
  mlp_backward(trainer.online.per_config, pc_cache, dfeatures, pc_grads);

  adam_step(trainer.online.head, head_grads, trainer.adam_head, trainer.opt);
  adam_step(trainer.online.per_config, pc_grads, trainer.adam_per_config, trainer.opt);
  soft_update(trainer.target.head, trainer.online.head, trainer.tau);
  soft_update(trainer.target.per_config, trainer.online.per_config, trainer.tau);
  return loss;
}

}  // namespace lpr
