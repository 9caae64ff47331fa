#include "lpr/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "lpr/rng.hpp"

namespace lpr {

namespace {
constexpr double kPi = std::numbers::pi;
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a > kPi) a -= 2.0 * kPi;
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

const char* to_string(PathSource s) {
  switch (s) {
    case PathSource::planner: return "planner";
    case PathSource::bezier: return "bezier";
    case PathSource::policy: return "policy";
    case PathSource::demo: return "demo";
  }
  return "unknown";
}

double ArmSpec::max_reach() const {
  double r = 0.0;
  for (double l : link_lengths) r += l;
  return r;
}

void ArmSpec::validate() const {
  if (link_lengths.empty())
    throw std::invalid_argument("ArmSpec: no links");
  for (double l : link_lengths)
    if (!(l > 0.0)) throw std::invalid_argument("ArmSpec: link length must be > 0");
  if (joint_limits.size() != link_lengths.size())
    throw std::invalid_argument("ArmSpec: joint_limits size mismatch");
  for (const auto& lim : joint_limits)
    if (!(lim[0] < lim[1])) throw std::invalid_argument("ArmSpec: empty joint limit interval");
}

JointConfig ArmSpec::clamp(const JointConfig& q) const {
  JointConfig r = q;
  for (int i = 0; i < r.size(); ++i)
    r[i] = std::clamp(r[i], joint_limits[i][0], joint_limits[i][1]);
  return r;
}

bool ArmSpec::within_limits(const JointConfig& q, double tol) const {
  for (int i = 0; i < q.size(); ++i)
    if (q[i] < joint_limits[i][0] - tol || q[i] > joint_limits[i][1] + tol) return false;
  return true;
}

EePose forward_kinematics(const ArmSpec& arm, const JointConfig& q) {
  if (q.size() != arm.dof())
    throw std::invalid_argument("forward_kinematics: config dimension mismatch");
  Eigen::Vector2d p = arm.base_position;
  double theta = 0.0;
  for (int i = 0; i < arm.dof(); ++i) {
    theta += q[i];
    p += arm.link_lengths[i] * Eigen::Vector2d(std::cos(theta), std::sin(theta));
  }
  return EePose{p, wrap_angle(theta), false};
}

std::vector<Eigen::Vector2d> link_points(const ArmSpec& arm, const JointConfig& q) {
  if (q.size() != arm.dof())
    throw std::invalid_argument("link_points: config dimension mismatch");
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(arm.dof() + 1);
  Eigen::Vector2d p = arm.base_position;
  pts.push_back(p);
  double theta = 0.0;
  for (int i = 0; i < arm.dof(); ++i) {
    theta += q[i];
    p += arm.link_lengths[i] * Eigen::Vector2d(std::cos(theta), std::sin(theta));
    pts.push_back(p);
  }
  return pts;
}

double config_distance(const JointConfig& a, const JointConfig& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("config_distance: dimension mismatch");
  return (a - b).norm();
}

double path_length(std::span<const JointConfig> configs) {
  double len = 0.0;
  for (std::size_t i = 1; i < configs.size(); ++i)
    len += config_distance(configs[i - 1], configs[i]);
  return len;
}

Path make_path(std::vector<JointConfig> configs, PathSource source) {
  Path p;
  p.configs = std::move(configs);
  p.source = source;
  p.cspace_length = path_length(p.configs);
  return p;
}

namespace {

Eigen::Matrix<double, 2, Eigen::Dynamic> position_jacobian(const ArmSpec& arm,
                                                           const JointConfig& q) {
  const int d = arm.dof();
  const auto pts = link_points(arm, q);
  Eigen::Matrix<double, 2, Eigen::Dynamic> J(2, d);
  const Eigen::Vector2d ee = pts.back();
  for (int i = 0; i < d; ++i) {
    const Eigen::Vector2d r = ee - pts[i];  // joint i sits at pts[i]
    J(0, i) = -r.y();
    J(1, i) = r.x();
  }
  return J;
}

// Orientation shaping is suspended once the position error drops below this,
// so the endgame is pure position descent and the tolerance is reachable.
constexpr double kOrientationPhase = 1e-3;

}  // namespace

IkResult inverse_kinematics(const ArmSpec& arm, const EePose& target, const JointConfig& seed,
                            std::uint64_t rng_seed, const IkParams& params) {
  arm.validate();
  if (seed.size() != arm.dof())
    throw std::invalid_argument("inverse_kinematics: seed dimension mismatch");

  const double dist = (target.position - arm.base_position).norm();
  // Lower bound on reach: the longest link folded against the rest of the
  // chain. Necessary (not sufficient) for reachability, so rejecting below it
  // is sound.
  const double longest =
      *std::max_element(arm.link_lengths.begin(), arm.link_lengths.end());
  const double min_reach = std::max(0.0, 2.0 * longest - arm.max_reach());
  if (dist > arm.max_reach() + 1e-9 || dist < min_reach - 1e-9)
    return IkResult{IkStatus::unreachable, seed, dist};

  Rng rng(rng_seed);
  IkResult best{IkStatus::no_convergence, seed,
                (forward_kinematics(arm, seed).position - target.position).norm()};
  const double lambda2 = params.damping * params.damping;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(arm.dof());

  for (int attempt = 0; attempt < params.max_restarts; ++attempt) {
    JointConfig q = seed;
    if (attempt > 0) {
      for (int i = 0; i < arm.dof(); ++i) {
        std::uniform_real_distribution<double> u(arm.joint_limits[i][0], arm.joint_limits[i][1]);
        q[i] = u(rng);
      }
    }
    for (int it = 0; it < params.max_iterations; ++it) {
      const EePose cur = forward_kinematics(arm, q);
      const Eigen::Vector2d dp = target.position - cur.position;
      if (dp.norm() <= params.position_tolerance) break;
      const auto J = position_jacobian(arm, q);
      const Eigen::Matrix2d A = J * J.transpose() + lambda2 * Eigen::Matrix2d::Identity();
      const auto solve = A.ldlt();
      Eigen::VectorXd dq = J.transpose() * solve.solve(dp);
      if (params.orientation_weight > 0.0 && dp.norm() > kOrientationPhase) {
        // Secondary objective: chase the target orientation inside the exact
        // nullspace of the position task (d theta_ee / d q_i = 1 for all i).
        // The damped projector leaks into the position task and can hover
        // above the tolerance; the SVD projector has no such pushback.
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        int rank = 0;
        for (int k = 0; k < sv.size(); ++k)
          if (sv(k) > 1e-9 * sv(0)) ++rank;
        const Eigen::VectorXd v =
            params.orientation_weight * wrap_angle(target.orientation - cur.orientation) * ones;
        const Eigen::MatrixXd Vr = svd.matrixV().leftCols(rank);
        dq += v - Vr * (Vr.transpose() * v);
      }
      const double n = dq.norm();
      if (n > params.max_step) dq *= params.max_step / n;
      q = arm.clamp(q + dq);
    }
    const double err = (forward_kinematics(arm, q).position - target.position).norm();
    if (err <= params.position_tolerance)
      return IkResult{IkStatus::ok, q, err};
    if (err < best.position_error) {
      best.config = q;
      best.position_error = err;
    }
  }
  return best;
}

Path normalize_path(const Path& raw, int count) {
  if (count < 2) throw std::invalid_argument("normalize_path: count must be >= 2");
  if (raw.configs.empty()) throw std::invalid_argument("normalize_path: empty path");

  Path out;
  out.source = raw.source;
  out.in_collision = raw.in_collision;
  out.configs.reserve(count);

  const auto& cfg = raw.configs;
  if (cfg.size() == 1) {
    out.configs.assign(count, cfg.front());
    out.cspace_length = 0.0;
    return out;
  }

  std::vector<double> cum(cfg.size(), 0.0);
  for (std::size_t i = 1; i < cfg.size(); ++i)
    cum[i] = cum[i - 1] + config_distance(cfg[i - 1], cfg[i]);
  const double total = cum.back();

  out.configs.push_back(cfg.front());
  if (total <= 0.0) {
    out.configs.assign(count, cfg.front());
    out.cspace_length = 0.0;
    return out;
  }
  std::size_t seg = 0;
  for (int k = 1; k < count - 1; ++k) {
    const double s = total * k / (count - 1);
    while (seg + 2 < cfg.size() && cum[seg + 1] < s) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double t = seg_len > 0.0 ? (s - cum[seg]) / seg_len : 0.0;
    out.configs.push_back(cfg[seg] + t * (cfg[seg + 1] - cfg[seg]));
  }
  out.configs.push_back(cfg.back());
  out.cspace_length = path_length(out.configs);
  return out;
}

}  // namespace lpr
