#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace lpr {

// Dense feed-forward nets with ReLU hidden layers and a linear final layer.
// Batches are column-major: each column of a matrix argument is one sample.

struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
};

struct NetParams {
  std::vector<Layer> layers;

  int input_dim() const { return static_cast<int>(layers.front().W.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().W.rows()); }
  void validate() const;  // dimension chaining, finite values

  // Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
  static NetParams xavier(std::span<const int> dims, std::uint64_t seed);
};

struct Gradients {
  std::vector<Layer> layers;
  static Gradients zeros_like(const NetParams& p);
};

Eigen::MatrixXd mlp_forward(const NetParams& params, const Eigen::MatrixXd& input);
Eigen::VectorXd mlp_forward(const NetParams& params, const Eigen::VectorXd& input);

// acts[0] is the input; acts[i+1] is layer i's post-activation output.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> acts;
  const Eigen::MatrixXd& output() const { return acts.back(); }
};

ForwardCache mlp_forward_cached(const NetParams& params, Eigen::MatrixXd input);

// upstream is dL/d(output). Accumulates nothing: grads is overwritten.
// Returns dL/d(input) for chaining through upstream structures.
Eigen::MatrixXd mlp_backward(const NetParams& params, const ForwardCache& cache,
                             const Eigen::MatrixXd& upstream, Gradients& grads);

// Convenience single-shot form of the above.
Gradients backprop(const NetParams& params, const Eigen::MatrixXd& input,
                   const Eigen::MatrixXd& upstream);

// Elementwise maximum across a non-empty set of equal-length vectors.
Eigen::VectorXd set_max_pool(std::span<const Eigen::VectorXd> features);

// Rowwise max over all columns; argmax[r] is the first column attaining the
// max of row r (gradient routing target).
Eigen::VectorXd max_pool_columns(const Eigen::MatrixXd& features, Eigen::VectorXi& argmax);

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Layer> m, v;
  long t = 0;
  static AdamState zeros_like(const NetParams& p);
};

void adam_step(NetParams& params, const Gradients& grads, AdamState& state,
               const AdamParams& opt);

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(NetParams& target, const NetParams& online, double tau);

// Binary checkpoint blocks: layer count, per-layer dims, row-major weight and
// bias doubles; Adam blocks add the step count and congruent m/v arrays.
// Round-trips are bit-exact on the build platform (little-endian IEEE754).
void write_net(std::ostream& out, const NetParams& p);
NetParams read_net(std::istream& in);
void write_adam(std::ostream& out, const AdamState& s);
AdamState read_adam(std::istream& in);

}  // namespace lpr
