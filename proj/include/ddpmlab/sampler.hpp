#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "ddpmlab/rng.hpp"
#include "ddpmlab/schedule.hpp"
#include "ddpmlab/target.hpp"

namespace ddpmlab {

/// Configuration of one reverse-process Monte Carlo run.
/// stop_t = 1 keeps the iterate the guarantees are stated at (Y_1);
/// stop_t = 0 additionally runs the final t = 1 step and returns Y_0.
struct ReverseRunConfig {
  Schedule<double> schedule;
  CoefficientDesign<double> design;
  ScoreOracle oracle;
  int dim = 1;
  int n = 1;
  int stop_t = 1;
  std::uint64_t seed = 0;
  bool record_trajectory = false;
  int threads = 1;
};

struct ReverseRunResult {
  /// n x d states of Y_{stop_t}.
  Eigen::MatrixXd ensemble;
  /// When recording: (t, n x d ensemble state) for t = T down to stop_t.
  std::vector<std::pair<int, Eigen::MatrixXd>> trajectory;
};

/// Runs the reverse process
///   Y_T ~ N(0, I_d),  Y_{t-1} = (Y_t + eta_t s_t(Y_t) + sigma_t Z_t)/sqrt(alpha_t)
/// for t = T..stop_t+1. Trajectory i draws from the child stream
/// mix_seed(seed, i), so the result is bitwise identical for any worker
/// partition and any thread count.
inline ReverseRunResult run_reverse(const ReverseRunConfig& cfg) {
  const int T = cfg.schedule.steps();
  const int d = cfg.dim;
  if (cfg.n < 1) throw std::invalid_argument("run_reverse: n must be >= 1");
  if (d < 1) throw std::invalid_argument("run_reverse: dim must be >= 1");
  if (cfg.stop_t < 0 || cfg.stop_t > T)
    throw std::invalid_argument("run_reverse: stop_t out of range");
  if (cfg.design.steps() != T)
    throw std::invalid_argument("run_reverse: design/schedule size mismatch");

  const int n_steps = T - cfg.stop_t;
  Eigen::ArrayXd inv_sqrt_alpha(T + 1), eta(T + 1), sigma(T + 1);
  for (int t = 1; t <= T; ++t) {
    inv_sqrt_alpha[t] = 1.0 / std::sqrt(cfg.schedule.alpha(t));
    eta[t] = cfg.design.eta(t);
    sigma[t] = std::sqrt(cfg.design.sigma2(t));
  }

  ReverseRunResult result;
  result.ensemble.resize(cfg.n, d);
  if (cfg.record_trajectory) {
    result.trajectory.reserve(n_steps + 1);
    for (int j = 0; j <= n_steps; ++j)
      result.trajectory.emplace_back(T - j, Eigen::MatrixXd(cfg.n, d));
  }

  std::atomic<int> overflow_step{-1};
  auto worker = [&](int begin, int end) {
    Eigen::VectorXd y(d), score(d), z(d);
    for (int i = begin; i < end; ++i) {
      NormalStream rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
      rng.fill(y);
      if (cfg.record_trajectory) result.trajectory[0].second.row(i) = y;
      for (int t = T; t > cfg.stop_t; --t) {
        cfg.oracle(t, y, score);
        rng.fill(z);
        y = (y + eta[t] * score + sigma[t] * z) * inv_sqrt_alpha[t];
        if (!(y.array().abs() <= 1e15).all()) {  // also catches NaN
          overflow_step.store(t);
          return;
        }
        if (cfg.record_trajectory)
          result.trajectory[T - t + 1].second.row(i) = y;
      }
      result.ensemble.row(i) = y;
    }
  };

  const int nthreads = std::max(1, cfg.threads);
  if (nthreads == 1 || cfg.n < 2 * nthreads) {
    worker(0, cfg.n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (cfg.n + nthreads - 1) / nthreads;
    for (int w = 0; w < nthreads; ++w) {
      const int b = w * chunk, e = std::min(cfg.n, b + chunk);
      if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }
  if (overflow_step.load() >= 0)
    throw std::overflow_error(
        "run_reverse: coordinate exceeded 1e15 at step t=" +
        std::to_string(overflow_step.load()) + " (divergent design)");
  return result;
}

struct BlockMoments {
  double on_var = 0;
  double off_var = 0;
  double cross_max = 0;
};

/// Mean per-coordinate sample variance over the first k and the last d-k
/// coordinates, plus the largest |covariance| between the two blocks.
inline BlockMoments empirical_block_moments(const Eigen::MatrixXd& ensemble,
                                            int k) {
  const int d = static_cast<int>(ensemble.cols());
  const int n = static_cast<int>(ensemble.rows());
  if (k < 0 || k > d)
    throw std::invalid_argument("empirical_block_moments: need 0 <= k <= d");
  BlockMoments m;
  if (n < 2) return m;
  Eigen::RowVectorXd mean = ensemble.colwise().mean();
  Eigen::MatrixXd c = ensemble.rowwise() - mean;
  Eigen::RowVectorXd var = c.colwise().squaredNorm() / double(n - 1);
  if (k > 0) m.on_var = var.head(k).mean();
  if (k < d) m.off_var = var.tail(d - k).mean();
  if (k > 0 && k < d) {
    Eigen::MatrixXd cross =
        c.leftCols(k).transpose() * c.rightCols(d - k) / double(n - 1);
    m.cross_max = cross.array().abs().maxCoeff();
  }
  return m;
}

}  // namespace ddpmlab
