#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace ddpmlab {

/// Learning-rate schedule of a T-step forward process. Stores beta_1..beta_T
/// together with alpha_t = 1 - beta_t and the running product
/// alpha_bar_t = prod_{i<=t} alpha_i. Accessors are 1-based (t = 1..T) to
/// match the usual notation; alpha_bar(0) == 1 by convention.
/// Immutable after construction; safe to share across threads.
template <typename Scalar = double>
class Schedule {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  explicit Schedule(Array beta)
      : beta_(std::move(beta)), alpha_(1 - beta_), alpha_bar_(beta_.size()) {
    if (beta_.size() < 2)
      throw std::invalid_argument("Schedule: need at least 2 steps");
    if (!(beta_ > Scalar(0)).all() || !(beta_ < Scalar(1)).all())
      throw std::invalid_argument("Schedule: beta_t must lie in (0,1)");
    Scalar prod = 1;
    for (Eigen::Index i = 0; i < beta_.size(); ++i) {
      prod *= alpha_[i];
      alpha_bar_[i] = prod;
    }
  }

  int steps() const { return static_cast<int>(beta_.size()); }

  Scalar beta(int t) const { return beta_[index(t)]; }
  Scalar alpha(int t) const { return alpha_[index(t)]; }
  Scalar alpha_bar(int t) const {
    if (t == 0) return Scalar(1);
    return alpha_bar_[index(t)];
  }

  const Array& betas() const { return beta_; }
  const Array& alphas() const { return alpha_; }
  const Array& alpha_bars() const { return alpha_bar_; }

 private:
  Eigen::Index index(int t) const {
    if (t < 1 || t > steps())
      throw std::out_of_range("Schedule: step index out of range");
    return t - 1;
  }

  Array beta_, alpha_, alpha_bar_;
};

/// Per-step reverse-sampler coefficients (eta_t, sigma_t^2), 1-based like
/// Schedule. sigma2 entries must be >= 0.
template <typename Scalar = double>
class CoefficientDesign {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  CoefficientDesign(Array eta, Array sigma2)
      : eta_(std::move(eta)), sigma2_(std::move(sigma2)) {
    if (eta_.size() != sigma2_.size() || eta_.size() < 1)
      throw std::invalid_argument("CoefficientDesign: array size mismatch");
    if ((sigma2_ < Scalar(0)).any())
      throw std::invalid_argument("CoefficientDesign: sigma2_t must be >= 0");
  }

  int steps() const { return static_cast<int>(eta_.size()); }

  Scalar eta(int t) const { return eta_[index(t)]; }
  Scalar sigma2(int t) const { return sigma2_[index(t)]; }

  const Array& etas() const { return eta_; }
  const Array& sigma2s() const { return sigma2_; }

 private:
  Eigen::Index index(int t) const {
    if (t < 1 || t > steps())
      throw std::out_of_range("CoefficientDesign: step index out of range");
    return t - 1;
  }

  Array eta_, sigma2_;
};

/// Geometric warm-up schedule
///   beta_1 = T^{-c0},  beta_{t+1} = (c1 log T / T) min{beta_1 (1 + c1 log T / T)^t, 1}
/// for t = 1..T-1. Defaults c0 = 2, c1 = 4 keep beta_1 representable and
/// satisfy the step-size bounds checked by the validation suite for T >= 100.
template <typename Scalar = double>
Schedule<Scalar> make_warmup_schedule(int T, Scalar c0 = Scalar(2),
                                     Scalar c1 = Scalar(4)) {
  if (T < 2) throw std::invalid_argument("make_warmup_schedule: T must be >= 2");
  if (!(c0 > Scalar(0)) || !(c1 > Scalar(0)))
    throw std::invalid_argument("make_warmup_schedule: c0, c1 must be > 0");
  using std::log;
  using std::pow;
  typename Schedule<Scalar>::Array beta(T);
  const Scalar rate = c1 * log(Scalar(T)) / Scalar(T);
  beta[0] = pow(Scalar(T), -c0);
  Scalar growth = beta[0];
  for (int t = 1; t < T; ++t) {
    growth *= (1 + rate);
    beta[t] = rate * std::min(growth, Scalar(1));
  }
  return Schedule<Scalar>(std::move(beta));
}

/// Linearly interpolated schedule between fixed endpoints,
/// beta_t = beta_min + (t-1)/(T-1) (beta_max - beta_min). The endpoints stay
/// fixed independently of T (the common practitioner convention).
template <typename Scalar = double>
Schedule<Scalar> make_linear_schedule(int T, Scalar beta_min = Scalar(1e-4),
                                      Scalar beta_max = Scalar(0.02)) {
  if (T < 2)
    throw std::invalid_argument("make_linear_schedule: T must be >= 2");
  if (!(Scalar(0) < beta_min) || !(beta_min <= beta_max) ||
      !(beta_max < Scalar(1)))
    throw std::invalid_argument(
        "make_linear_schedule: need 0 < beta_min <= beta_max < 1");
  typename Schedule<Scalar>::Array beta(T);
  // Convex-combination form keeps both endpoints exact.
  for (int t = 1; t <= T; ++t)
    beta[t - 1] = (Scalar(T - t) * beta_min + Scalar(t - 1) * beta_max) /
                  Scalar(T - 1);
  return Schedule<Scalar>(std::move(beta));
}

/// The coefficient choice that keeps the reverse conditional aligned with the
/// forward one on the off-support block:
///   eta_t = 1 - alpha_t,  sigma_t^2 = (1 - alpha_t)(alpha_t - abar_t)/(1 - abar_t).
/// sigma_1^2 evaluates to exactly 0 since abar_1 = alpha_1.
template <typename Scalar>
CoefficientDesign<Scalar> star_design(const Schedule<Scalar>& s) {
  const int T = s.steps();
  typename CoefficientDesign<Scalar>::Array eta(T), sigma2(T);
  for (int t = 1; t <= T; ++t) {
    eta[t - 1] = 1 - s.alpha(t);
    sigma2[t - 1] = (1 - s.alpha(t)) * (s.alpha(t) - s.alpha_bar(t)) /
                    (1 - s.alpha_bar(t));
  }
  return CoefficientDesign<Scalar>(std::move(eta), std::move(sigma2));
}

/// The conventional choice eta_t = sigma_t^2 = 1 - alpha_t.
template <typename Scalar>
CoefficientDesign<Scalar> simple_design(const Schedule<Scalar>& s) {
  const int T = s.steps();
  typename CoefficientDesign<Scalar>::Array eta(T), sigma2(T);
  for (int t = 1; t <= T; ++t) {
    eta[t - 1] = 1 - s.alpha(t);
    sigma2[t - 1] = eta[t - 1];
  }
  return CoefficientDesign<Scalar>(std::move(eta), std::move(sigma2));
}

/// Shift every eta_t by eta_shift and scale every sigma_t by sigma_scale
/// (so sigma2 scales by sigma_scale^2). perturbed_design(d, 0, 1) == d.
template <typename Scalar>
CoefficientDesign<Scalar> perturbed_design(const CoefficientDesign<Scalar>& base,
                                           Scalar eta_shift,
                                           Scalar sigma_scale) {
  if (!(sigma_scale > Scalar(0)))
    throw std::invalid_argument("perturbed_design: sigma_scale must be > 0");
  return CoefficientDesign<Scalar>(base.etas() + eta_shift,
                                   sigma_scale * sigma_scale * base.sigma2s());
}

}  // namespace ddpmlab
