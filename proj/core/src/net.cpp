#include "lpr/net.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "lpr/rng.hpp"

namespace lpr {

void NetParams::validate() const {
  if (layers.empty()) throw std::invalid_argument("net has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.W.rows() != l.b.size()) throw std::invalid_argument("bias/weight row mismatch");
    if (i > 0 && layers[i - 1].W.rows() != l.W.cols())
      throw std::invalid_argument("layer dimension chain broken");
    if (!l.W.allFinite() || !l.b.allFinite())
      throw std::invalid_argument("non-finite parameter");
  }
}

NetParams NetParams::xavier(std::span<const int> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("need at least input and output dims");
  Rng rng(seed);
  NetParams p;
  p.layers.reserve(dims.size() - 1);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const int fan_in = dims[i];
    const int fan_out = dims[i + 1];
    if (fan_in <= 0 || fan_out <= 0) throw std::invalid_argument("non-positive layer dim");
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer l;
    l.W.resize(fan_out, fan_in);
    for (int r = 0; r < l.W.rows(); ++r)
      for (int c = 0; c < l.W.cols(); ++c) l.W(r, c) = u(rng);
    l.b = Eigen::VectorXd::Zero(fan_out);
    p.layers.push_back(std::move(l));
  }
  return p;
}

Gradients Gradients::zeros_like(const NetParams& p) {
  Gradients g;
  g.layers.reserve(p.layers.size());
  for (const auto& l : p.layers)
    g.layers.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()),
                        Eigen::VectorXd::Zero(l.b.size())});
  return g;
}

Eigen::MatrixXd mlp_forward(const NetParams& params, const Eigen::MatrixXd& input) {
  Eigen::MatrixXd a = input;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    a = (l.W * a).colwise() + l.b;
    if (i + 1 < params.layers.size()) a = a.cwiseMax(0.0);
  }
  return a;
}

Eigen::VectorXd mlp_forward(const NetParams& params, const Eigen::VectorXd& input) {
  return mlp_forward(params, Eigen::MatrixXd(input)).col(0);
}

ForwardCache mlp_forward_cached(const NetParams& params, Eigen::MatrixXd input) {
  ForwardCache cache;
  cache.acts.reserve(params.layers.size() + 1);
  cache.acts.push_back(std::move(input));
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    Eigen::MatrixXd z = (l.W * cache.acts.back()).colwise() + l.b;
    if (i + 1 < params.layers.size()) z = z.cwiseMax(0.0);
    cache.acts.push_back(std::move(z));
  }
  return cache;
}

Eigen::MatrixXd mlp_backward(const NetParams& params, const ForwardCache& cache,
                             const Eigen::MatrixXd& upstream, Gradients& grads) {
  const auto n = params.layers.size();
  if (cache.acts.size() != n + 1) throw std::invalid_argument("cache/net layer mismatch");
  grads.layers.resize(n);
  Eigen::MatrixXd g = upstream;
  for (std::size_t idx = n; idx-- > 0;) {
    if (idx + 1 < n) {
      // ReLU: post-activation is positive exactly where the unit was active.
      g = g.cwiseProduct((cache.acts[idx + 1].array() > 0.0).cast<double>().matrix());
    }
    grads.layers[idx].W = g * cache.acts[idx].transpose();
    grads.layers[idx].b = g.rowwise().sum();
    g = params.layers[idx].W.transpose() * g;
  }
  return g;
}

Gradients backprop(const NetParams& params, const Eigen::MatrixXd& input,
                   const Eigen::MatrixXd& upstream) {
  Gradients grads;
  const ForwardCache cache = mlp_forward_cached(params, input);
  mlp_backward(params, cache, upstream, grads);
  return grads;
}

Eigen::VectorXd set_max_pool(std::span<const Eigen::VectorXd> features) {
  if (features.empty()) throw std::invalid_argument("max pool over empty set");
  Eigen::VectorXd out = features[0];
  for (std::size_t i = 1; i < features.size(); ++i) {
    if (features[i].size() != out.size()) throw std::invalid_argument("pool dim mismatch");
    out = out.cwiseMax(features[i]);
  }
  return out;
}

Eigen::VectorXd max_pool_columns(const Eigen::MatrixXd& features, Eigen::VectorXi& argmax) {
  if (features.cols() == 0) throw std::invalid_argument("max pool over empty set");
  Eigen::VectorXd out = features.col(0);
  argmax = Eigen::VectorXi::Zero(features.rows());
  for (Eigen::Index c = 1; c < features.cols(); ++c) {
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
      if (features(r, c) > out(r)) {
        out(r) = features(r, c);
        argmax(r) = static_cast<int>(c);
      }
    }
  }
  return out;
}

AdamState AdamState::zeros_like(const NetParams& p) {
  AdamState s;
  const Gradients z = Gradients::zeros_like(p);
  s.m = z.layers;
  s.v = z.layers;
  s.t = 0;
  return s;
}

void adam_step(NetParams& params, const Gradients& grads, AdamState& state,
               const AdamParams& opt) {
  if (grads.layers.size() != params.layers.size() || state.m.size() != params.layers.size())
    throw std::invalid_argument("optimizer/net shape mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));
  auto step = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = (opt.beta2 * v.array() + (1.0 - opt.beta2) * g.array().square()).matrix();
    theta.array() -= opt.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + opt.eps);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    step(params.layers[i].W, grads.layers[i].W, state.m[i].W, state.v[i].W);
    step(params.layers[i].b, grads.layers[i].b, state.m[i].b, state.v[i].b);
  }
}

void soft_update(NetParams& target, const NetParams& online, double tau) {
  if (target.layers.size() != online.layers.size())
    throw std::invalid_argument("target/online shape mismatch");
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    target.layers[i].W = tau * online.layers[i].W + (1.0 - tau) * target.layers[i].W;
    target.layers[i].b = tau * online.layers[i].b + (1.0 - tau) * target.layers[i].b;
  }
}

namespace {

constexpr std::uint32_t kNetMagic = 0x4c4e4554;   // "LNET"
constexpr std::uint32_t kAdamMagic = 0x4c41444d;  // "LADM"

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("truncated checkpoint block");
  return v;
}

void write_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::int64_t read_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("truncated checkpoint block");
  return v;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
}

void read_matrix(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!in) throw std::runtime_error("truncated checkpoint block");
      m(r, c) = v;
    }
}

void write_layers(std::ostream& out, const std::vector<Layer>& layers) {
  write_u32(out, static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    write_u32(out, static_cast<std::uint32_t>(l.W.rows()));
    write_u32(out, static_cast<std::uint32_t>(l.W.cols()));
    write_matrix(out, l.W);
    Eigen::MatrixXd b = l.b;
    write_matrix(out, b);
  }
}

std::vector<Layer> read_layers(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  if (n == 0 || n > 64) throw std::runtime_error("implausible layer count");
  std::vector<Layer> layers(n);
  for (auto& l : layers) {
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    if (rows == 0 || cols == 0 || rows > 65536 || cols > 65536)
      throw std::runtime_error("implausible layer shape");
    l.W.resize(rows, cols);
    read_matrix(in, l.W);
    Eigen::MatrixXd b(rows, 1);
    read_matrix(in, b);
    l.b = b.col(0);
  }
  return layers;
}

}  // namespace

void write_net(std::ostream& out, const NetParams& p) {
  write_u32(out, kNetMagic);
  write_layers(out, p.layers);
}

NetParams read_net(std::istream& in) {
  if (read_u32(in) != kNetMagic) throw std::runtime_error("bad net block magic");
  NetParams p;
  p.layers = read_layers(in);
  p.validate();
  return p;
}

void write_adam(std::ostream& out, const AdamState& s) {
  write_u32(out, kAdamMagic);
  write_i64(out, s.t);
  write_layers(out, s.m);
  write_layers(out, s.v);
}

AdamState read_adam(std::istream& in) {
  if (read_u32(in) != kAdamMagic) throw std::runtime_error("bad adam block magic");
  AdamState s;
  s.t = read_i64(in);
  s.m = read_layers(in);
  s.v = read_layers(in);
  if (s.m.size() != s.v.size()) throw std::runtime_error("adam moment mismatch");
  return s;
}

}  // namespace lpr
