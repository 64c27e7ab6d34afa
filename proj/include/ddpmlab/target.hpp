#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "ddpmlab/rng.hpp"
#include "ddpmlab/schedule.hpp"

namespace ddpmlab {

enum class TargetKind { DegenerateGaussian, PointMixture };

/// Analytic target family with exact sampling, exact noised marginals,
/// exact posterior means and exact scores.
///
/// DegenerateGaussian: N(0, I_k) supported on the first k coordinates of R^d.
/// PointMixture: atoms x_1..x_m in R^d with positive weights summing to 1;
/// radius records max_i ||x_i||_2.
class TargetDistribution {
 public:
  static TargetDistribution degenerate_gaussian(int k, int d) {
    if (k < 1 || k > d)
      throw std::invalid_argument("degenerate_gaussian: need 1 <= k <= d");
    TargetDistribution t;
    t.kind_ = TargetKind::DegenerateGaussian;
    t.k_ = k;
    t.d_ = d;
    t.radius_ = 0;
    return t;
  }

  static TargetDistribution point_mixture(Eigen::MatrixXd atoms,
                                          Eigen::VectorXd weights) {
    if (atoms.rows() < 1 || atoms.rows() != weights.size())
      throw std::invalid_argument("point_mixture: atom/weight size mismatch");
    if (!atoms.allFinite())
      throw std::invalid_argument("point_mixture: atoms must be finite");
    if ((weights.array() <= 0).any())
      throw std::invalid_argument("point_mixture: weights must be positive");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
      throw std::invalid_argument("point_mixture: weights must sum to 1");
    TargetDistribution t;
    t.kind_ = TargetKind::PointMixture;
    t.d_ = static_cast<int>(atoms.cols());
    t.k_ = static_cast<int>(atoms.rows());
    t.radius_ = atoms.rowwise().norm().maxCoeff();
    t.atoms_ = std::move(atoms);
    t.weights_ = std::move(weights);
    t.log_weights_ = t.weights_.array().log();
    return t;
  }

  TargetKind kind() const { return kind_; }
  int dim() const { return d_; }
  /// Intrinsic dimension (DegenerateGaussian) or atom-count proxy (PointMixture).
  int intrinsic_dim() const { return k_; }
  double radius() const { return radius_; }
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::VectorXd& log_weights() const { return log_weights_; }

 private:
  TargetDistribution() = default;

  TargetKind kind_ = TargetKind::DegenerateGaussian;
  int d_ = 0;
  int k_ = 0;
  double radius_ = 0;
  Eigen::MatrixXd atoms_;       // m x d
  Eigen::VectorXd weights_;     // m
  Eigen::VectorXd log_weights_;
};

/// n i.i.d. draws from p_data, one sample per row. For the degenerate
/// Gaussian the last d-k coordinates are exactly zero.
inline Eigen::MatrixXd sample_x0(const TargetDistribution& target, int n,
                                 std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_x0: n must be >= 1");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, target.dim());
  NormalStream rng(seed);
  if (target.kind() == TargetKind::DegenerateGaussian) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < target.intrinsic_dim(); ++j) out(i, j) = rng();
  } else {
    std::discrete_distribution<int> pick(target.weights().data(),
                                         target.weights().data() +
                                             target.weights().size());
    for (int i = 0; i < n; ++i)
      out.row(i) = target.atoms().row(pick(rng.generator()));
  }
  return out;
}

/// n draws of X_t = sqrt(abar_t) X_0 + sqrt(1 - abar_t) W, W ~ N(0, I_d).
inline Eigen::MatrixXd forward_marginal_sample(const TargetDistribution& target,
                                               const Schedule<double>& s, int t,
                                               int n, std::uint64_t seed) {
  if (t < 1 || t > s.steps())
    throw std::out_of_range("forward_marginal_sample: t out of range");
  const double abar = s.alpha_bar(t);
  Eigen::MatrixXd x = sample_x0(target, n, mix_seed(seed, 0));
  NormalStream rng(mix_seed(seed, 1));
  const double a = std::sqrt(abar), b = std::sqrt(1 - abar);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < target.dim(); ++j) x(i, j) = a * x(i, j) + b * rng();
  return x;
}

/// log q_t(x), the density of the noised marginal at step t >= 1.
/// DegenerateGaussian: N(x; 0, abar_t I_k + (1-abar_t) I_d).
/// PointMixture: log-sum-exp over atom components; safe for ||x|| up to 1e6.
inline double log_density(const TargetDistribution& target,
                          const Schedule<double>& s, int t,
                          Eigen::Ref<const Eigen::VectorXd> x) {
  if (t < 1 || t > s.steps())
    throw std::out_of_range("log_density: t out of range (defined for t >= 1)");
  if (x.size() != target.dim())
    throw std::invalid_argument("log_density: dimension mismatch");
  constexpr double log2pi = 1.8378770664093454836;
  const double abar = s.alpha_bar(t);
  const double v = 1 - abar;
  const int d = target.dim();
  if (target.kind() == TargetKind::DegenerateGaussian) {
    const int k = target.intrinsic_dim();
    double quad = x.head(k).squaredNorm() + x.tail(d - k).squaredNorm() / v;
    return -0.5 * (quad + d * log2pi + (d - k) * std::log(v));
  }
  const Eigen::MatrixXd& atoms = target.atoms();
  const double sa = std::sqrt(abar);
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd expo(atoms.rows());
  for (Eigen::Index i = 0; i < atoms.rows(); ++i) {
    expo[i] = target.log_weights()[i] -
              (x - sa * atoms.row(i).transpose()).squaredNorm() / (2 * v);
    best = std::max(best, expo[i]);
  }
  double acc = 0;
  for (Eigen::Index i = 0; i < atoms.rows(); ++i)
    acc += std::exp(expo[i] - best);
  return best + std::log(acc) - 0.5 * d * (log2pi + std::log(v));
}

/// E[X_0 | X_t = x]. PointMixture: softmax-weighted atom average with
/// weights proportional to w_i exp(-||x - sqrt(abar_t) x_i||^2 / (2(1-abar_t))),
/// evaluated with max-subtraction so early steps (tiny 1-abar_t) cannot
/// underflow. DegenerateGaussian: sqrt(abar_t) x on the first k coordinates,
/// zero elsewhere.
inline Eigen::VectorXd posterior_mean(const TargetDistribution& target,
                                      const Schedule<double>& s, int t,
                                      Eigen::Ref<const Eigen::VectorXd> x) {
  if (t < 1 || t > s.steps())
    throw std::out_of_range("posterior_mean: t out of range");
  if (x.size() != target.dim())
    throw std::invalid_argument("posterior_mean: dimension mismatch");
  const double abar = s.alpha_bar(t);
  if (target.kind() == TargetKind::DegenerateGaussian) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(target.dim());
    out.head(target.intrinsic_dim()) =
        std::sqrt(abar) * x.head(target.intrinsic_dim());
    return out;
  }
  const Eigen::MatrixXd& atoms = target.atoms();
  const double v = 1 - abar, sa = std::sqrt(abar);
  Eigen::VectorXd expo(atoms.rows());
  for (Eigen::Index i = 0; i < atoms.rows(); ++i)
    expo[i] = target.log_weights()[i] -
              (x - sa * atoms.row(i).transpose()).squaredNorm() / (2 * v);
  const double best = expo.maxCoeff();
  Eigen::VectorXd w = (expo.array() - best).exp();
  w /= w.sum();
  return atoms.transpose() * w;
}

/// Exact score s_t^*(x) = grad log q_t(x).
/// DegenerateGaussian: -x_i on the first k coordinates (unit marginal
/// variance), -x_i/(1-abar_t) on the rest. PointMixture: softmax-weighted
/// sum of the per-atom Gaussian scores -(x - sqrt(abar_t) x_i)/(1-abar_t).
inline Eigen::VectorXd exact_score(const TargetDistribution& target,
                                   const Schedule<double>& s, int t,
                                   Eigen::Ref<const Eigen::VectorXd> x) {
  if (t < 1 || t > s.steps())
    throw std::out_of_range("exact_score: t out of range");
  if (x.size() != target.dim())
    throw std::invalid_argument("exact_score: dimension mismatch");
  const double abar = s.alpha_bar(t);
  const double v = 1 - abar;
  if (target.kind() == TargetKind::DegenerateGaussian) {
    const int k = target.intrinsic_dim();
    Eigen::VectorXd out(target.dim());
    out.head(k) = -x.head(k);
    out.tail(target.dim() - k) = -x.tail(target.dim() - k) / v;
    return out;
  }
  const Eigen::MatrixXd& atoms = target.atoms();
  const double sa = std::sqrt(abar);
  Eigen::VectorXd expo(atoms.rows());
  for (Eigen::Index i = 0; i < atoms.rows(); ++i)
    expo[i] = target.log_weights()[i] -
              (x - sa * atoms.row(i).transpose()).squaredNorm() / (2 * v);
  const double best = expo.maxCoeff();
  Eigen::VectorXd w = (expo.array() - best).exp();
  w /= w.sum();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(target.dim());
  for (Eigen::Index i = 0; i < atoms.rows(); ++i)
    out -= w[i] * (x - sa * atoms.row(i).transpose()) / v;
  return out;
}

/// Deterministic mapping (t, x) -> s_t(x), labelled "exact" or "perturbed".
class ScoreOracle {
 public:
  using Fn = std::function<void(int, Eigen::Ref<const Eigen::VectorXd>,
                                Eigen::Ref<Eigen::VectorXd>)>;

  ScoreOracle(Fn fn, std::string label)
      : fn_(std::move(fn)), label_(std::move(label)) {}

  void operator()(int t, Eigen::Ref<const Eigen::VectorXd> x,
                  Eigen::Ref<Eigen::VectorXd> out) const {
    fn_(t, x, out);
  }

  Eigen::VectorXd eval(int t, Eigen::Ref<const Eigen::VectorXd> x) const {
    Eigen::VectorXd out(x.size());
    fn_(t, x, out);
    return out;
  }

  const std::string& label() const { return label_; }

 private:
  Fn fn_;
  std::string label_;
};

inline ScoreOracle exact_oracle(const TargetDistribution& target,
                                const Schedule<double>& s) {
  return ScoreOracle(
      [target, s](int t, Eigen::Ref<const Eigen::VectorXd> x,
                  Eigen::Ref<Eigen::VectorXd> out) {
        out = exact_score(target, s, t, x);
      },
      "exact");
}

enum class PerturbationModel { ConstantBias, RandomField };

/// Oracle s_t(x) = s_t^*(x) + e_t(x) whose error has exactly unit-norm
/// profile eps at every point, so the averaged score error equals eps:
///   constant-bias: e_t(x) = eps u_t for a per-step unit vector u_t;
///   random-field:  e_t(x) = eps u_t sign(v_t . x) with unit u_t, v_t.
/// u_t, v_t are drawn once from the given seed; evaluation is deterministic.
inline ScoreOracle make_perturbed_oracle(const TargetDistribution& target,
                                         const Schedule<double>& s, double eps,
                                         PerturbationModel model,
                                         std::uint64_t seed) {
  if (eps < 0)
    throw std::invalid_argument("make_perturbed_oracle: eps must be >= 0");
  const int T = s.steps(), d = target.dim();
  auto dirs = std::make_shared<Eigen::MatrixXd>(T + 1, d);
  auto probes = std::make_shared<Eigen::MatrixXd>(T + 1, d);
  NormalStream rng(seed);
  for (int t = 0; t <= T; ++t) {
    Eigen::VectorXd u(d), v(d);
    rng.fill(u);
    rng.fill(v);
    dirs->row(t) = u.normalized();
    probes->row(t) = v.normalized();
  }
  return ScoreOracle(
      [target, s, eps, model, dirs, probes](
          int t, Eigen::Ref<const Eigen::VectorXd> x,
          Eigen::Ref<Eigen::VectorXd> out) {
        out = exact_score(target, s, t, x);
        if (eps == 0) return;
        if (model == PerturbationModel::ConstantBias) {
          out += eps * dirs->row(t).transpose();
        } else {
          const double side = probes->row(t).dot(x) < 0 ? -1.0 : 1.0;
          out += (eps * side) * dirs->row(t).transpose();
        }
      },
      "perturbed");
}

}  // namespace ddpmlab
