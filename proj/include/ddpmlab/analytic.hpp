#pragma once

#include <cmath>
#include <stdexcept>

#include "ddpmlab/schedule.hpp"

namespace ddpmlab {

/// Zero-mean Gaussian law on R^d whose covariance is on_var on the first k
/// coordinates and off_var on the remaining d-k ("two-block diagonal").
template <typename Scalar = double>
struct DiagGaussianLaw {
  int k = 0;
  int d = 0;
  Scalar on_var = 1;
  Scalar off_var = 1;
};

/// Per-coordinate KL between zero-mean Gaussians with variance ratio r:
///   g(r) = (r - log r - 1) / 2.
/// For r near 1 the naive form loses all significant digits, so a short
/// series in u = r - 1 is used when |u| <= 1e-4.
template <typename Scalar>
Scalar variance_mismatch_kl(Scalar r) {
  if (!(r > Scalar(0)))
    throw std::invalid_argument("variance_mismatch_kl: ratio must be > 0");
  const Scalar u = r - 1;
  if (std::abs(u) <= Scalar(1e-4)) {
    // u - log1p(u) = u^2/2 - u^3/3 + u^4/4 - u^5/5 + O(u^6)
    return u * u * (Scalar(0.5) + u * (Scalar(-1) / 3 + u * (Scalar(0.25) + u * (Scalar(-1) / 5)))) / 2;
  }
  return (u - std::log1p(u)) / 2;
}

/// Law of the forward marginal X_t for the rank-k degenerate Gaussian target:
/// on-support variance abar_t + (1 - abar_t) = 1, off-support 1 - abar_t.
template <typename Scalar>
DiagGaussianLaw<Scalar> forward_marginal_law(const Schedule<Scalar>& s, int t,
                                             int k, int d) {
  if (k < 1 || k > d)
    throw std::invalid_argument("forward_marginal_law: need 1 <= k <= d");
  if (t < 1 || t > s.steps())
    throw std::out_of_range("forward_marginal_law: t out of range");
  return DiagGaussianLaw<Scalar>{k, d, Scalar(1), 1 - s.alpha_bar(t)};
}

/// Exact law of the reverse iterate Y_{stop_t} under the exact (linear)
/// score of the degenerate Gaussian target. Starting from Y_T ~ N(0, I_d),
/// each step t maps the block variances through
///   on  <- ((1 - eta_t)^2 on + sigma_t^2) / alpha_t
///   off <- ((1 - eta_t/(1 - abar_t))^2 off + sigma_t^2) / alpha_t.
template <typename Scalar>
DiagGaussianLaw<Scalar> propagate_reverse_law(const Schedule<Scalar>& s,
                                              const CoefficientDesign<Scalar>& design,
                                              int k, int d, int stop_t = 1) {
  if (k < 1 || k > d)
    throw std::invalid_argument("propagate_reverse_law: need 1 <= k <= d");
  if (stop_t < 1 || stop_t > s.steps())
    throw std::out_of_range("propagate_reverse_law: stop_t out of range");
  if (design.steps() != s.steps())
    throw std::invalid_argument("propagate_reverse_law: design/schedule size mismatch");
  Scalar on = 1, off = 1;
  for (int t = s.steps(); t > stop_t; --t) {
    const Scalar fon = 1 - design.eta(t);
    const Scalar foff = 1 - design.eta(t) / (1 - s.alpha_bar(t));
    on = (fon * fon * on + design.sigma2(t)) / s.alpha(t);
    off = (foff * foff * off + design.sigma2(t)) / s.alpha(t);
    if (on > Scalar(1e30) || off > Scalar(1e30))
      throw std::overflow_error("propagate_reverse_law: variance diverged");
  }
  return DiagGaussianLaw<Scalar>{k, d, on, off};
}

/// KL(p || q) for two-block diagonal zero-mean Gaussians:
///   k g(p.on/q.on) + (d-k) g(p.off/q.off).
template <typename Scalar>
Scalar diag_gaussian_kl(const DiagGaussianLaw<Scalar>& p,
                        const DiagGaussianLaw<Scalar>& q) {
  if (p.k != q.k || p.d != q.d)
    throw std::invalid_argument("diag_gaussian_kl: dimension mismatch");
  return Scalar(p.k) * variance_mismatch_kl(p.on_var / q.on_var) +
         Scalar(p.d - p.k) * variance_mismatch_kl(p.off_var / q.off_var);
}

/// On/off-support split of the expected per-step conditional KL (below).
template <typename Scalar>
struct StepKlParts {
  Scalar on = 0;
  Scalar off = 0;
  Scalar total() const { return on + off; }
};

/// E_{x_t ~ q_t}[ KL( law(X_{t-1} | X_t = x_t) || law(Y_{t-1} | Y_t = x_t) ) ]
/// for the rank-k degenerate Gaussian target with exact score, evaluated from
/// the generic conditional-Gaussian KL with means linear in x_t. Per
/// coordinate in a block the contribution is
///   (m_X - m_Y)^2 E[x^2] / (2 v_Y) + g(v_X / v_Y)
/// with, writing rho_t = (1 - abar_{t-1})/(1 - abar_t),
///   on:  m_X = sqrt(alpha_t),        v_X = 1 - alpha_t,        E[x^2] = 1
///   off: m_X = sqrt(alpha_t) rho_t,  v_X = (1 - alpha_t) rho_t, E[x^2] = 1 - abar_t
///   Y:   m_Y = (1 - eta_t)/sqrt(alpha_t)  (on)
///        m_Y = (1 - eta_t/(1 - abar_t))/sqrt(alpha_t)  (off)
///        v_Y = sigma_t^2 / alpha_t  (both blocks).
template <typename Scalar>
StepKlParts<Scalar> conditional_step_kl_parts(const Schedule<Scalar>& s,
                                              const CoefficientDesign<Scalar>& design,
                                              int t, int k, int d) {
  if (t < 2 || t > s.steps())
    throw std::out_of_range("conditional_step_kl: need 2 <= t <= T");
  if (k < 1 || k > d)
    throw std::invalid_argument("conditional_step_kl: need 1 <= k <= d");
  if (!(design.sigma2(t) > Scalar(0)))
    throw std::invalid_argument("conditional_step_kl: sigma_t = 0 rejected");
  using std::sqrt;
  const Scalar alpha = s.alpha(t);
  const Scalar abar = s.alpha_bar(t);
  const Scalar rho = (1 - s.alpha_bar(t - 1)) / (1 - abar);
  const Scalar v_y = design.sigma2(t) / alpha;

  const Scalar m_x_on = sqrt(alpha);
  const Scalar v_x_on = 1 - alpha;
  const Scalar m_x_off = sqrt(alpha) * rho;
  const Scalar v_x_off = (1 - alpha) * rho;

  const Scalar m_y_on = (1 - design.eta(t)) / sqrt(alpha);
  const Scalar m_y_off = (1 - design.eta(t) / (1 - abar)) / sqrt(alpha);

  const Scalar don = m_x_on - m_y_on;
  const Scalar doff = m_x_off - m_y_off;

  StepKlParts<Scalar> parts;
  parts.on = Scalar(k) * (don * don * Scalar(1) / (2 * v_y) +
                          variance_mismatch_kl(v_x_on / v_y));
  parts.off = Scalar(d - k) * (doff * doff * (1 - abar) / (2 * v_y) +
                               variance_mismatch_kl(v_x_off / v_y));
  return parts;
}

template <typename Scalar>
Scalar conditional_step_kl(const Schedule<Scalar>& s,
                           const CoefficientDesign<Scalar>& design, int t,
                           int k, int d) {
  return conditional_step_kl_parts(s, design, t, k, d).total();
}

/// Per-step lower bound for the expected conditional KL under arbitrary
/// coefficients (perfect score, k <= d/2):
///   d/4 (eta_t - eta_t^*)^2 + d/40 (sigma_t^{*2}/sigma_t^2 - 1)^2.
/// The reference coefficients are evaluated inline from the schedule.
template <typename Scalar>
Scalar step_kl_lower_bound(const Schedule<Scalar>& s,
                            const CoefficientDesign<Scalar>& design, int t,
                            int d) {
  if (t < 2 || t > s.steps())
    throw std::out_of_range("step_kl_lower_bound: need 2 <= t <= T");
  if (!(design.sigma2(t) > Scalar(0)))
    throw std::invalid_argument("step_kl_lower_bound: sigma_t = 0 rejected");
  const Scalar eta_star = 1 - s.alpha(t);
  const Scalar sigma2_star = (1 - s.alpha(t)) *
                             (s.alpha(t) - s.alpha_bar(t)) /
                             (1 - s.alpha_bar(t));
  const Scalar de = design.eta(t) - eta_star;
  const Scalar dr = sigma2_star / design.sigma2(t) - 1;
  return Scalar(d) / 4 * de * de + Scalar(d) / 40 * dr * dr;
}

template <typename Scalar>
struct ChainKlBound {
  Scalar init_kl = 0;
  Scalar step_sum = 0;
  Scalar total = 0;
};

/// Chain-rule decomposition of the KL between the forward and reverse chains:
/// initialization term KL(q_T || N(0, I_d)) = (d-k) g(1 - abar_T) plus the
/// sum over t = 2..T of the expected per-step conditional KL. The total upper
/// bounds the terminal KL(q_1 || p_1) by the data-processing inequality.
template <typename Scalar>
ChainKlBound<Scalar> chain_kl_upper_bound(const Schedule<Scalar>& s,
                                          const CoefficientDesign<Scalar>& design,
                                          int k, int d) {
  if (k < 1 || k > d)
    throw std::invalid_argument("chain_kl_upper_bound: need 1 <= k <= d");
  ChainKlBound<Scalar> out;
  out.init_kl =
      Scalar(d - k) * variance_mismatch_kl(1 - s.alpha_bar(s.steps()));
  for (int t = 2; t <= s.steps(); ++t)
    out.step_sum += conditional_step_kl(s, design, t, k, d);
  out.total = out.init_kl + out.step_sum;
  return out;
}

}  // namespace ddpmlab
