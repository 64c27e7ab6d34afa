#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ddpmlab {

/// Finite point cloud in R^d, one point per row. Clouds are capped at 1e5
/// points to keep the exact O(n |net|) greedy sweeps at desk scale.
struct PointCloud {
  Eigen::MatrixXd points;
  double radius = 0;

  static PointCloud from_matrix(Eigen::MatrixXd pts) {
    if (pts.rows() < 1)
      throw std::invalid_argument("PointCloud: need at least one point");
    if (pts.rows() > 100000)
      throw std::invalid_argument("PointCloud: capped at 1e5 points");
    if (!pts.allFinite())
      throw std::invalid_argument("PointCloud: coordinates must be finite");
    PointCloud c;
    c.radius = pts.rowwise().norm().maxCoeff();
    c.points = std::move(pts);
    return c;
  }
};

/// Greedy farthest-point eps-net. Starts at index 0 and repeatedly adds the
/// point farthest from the current net (ties broken by lowest index) until
/// every point lies within eps of the net. The returned centers are pairwise
/// more than eps apart, so |net| is at most the eps-packing number.
inline std::vector<int> greedy_epsilon_net(const PointCloud& cloud,
                                           double eps) {
  if (!(eps > 0))
    throw std::invalid_argument("greedy_epsilon_net: eps must be > 0");
  const int n = static_cast<int>(cloud.points.rows());
  std::vector<int> net{0};
  Eigen::VectorXd dist =
      (cloud.points.rowwise() - cloud.points.row(0)).rowwise().norm();
  for (;;) {
    int far = 0;
    double far_dist = dist[0];
    for (int i = 1; i < n; ++i) {
      if (dist[i] > far_dist) {
        far_dist = dist[i];
        far = i;
      }
    }
    if (far_dist <= eps) break;
    net.push_back(far);
    dist = dist.cwiseMin(
        (cloud.points.rowwise() - cloud.points.row(far)).rowwise().norm());
  }
  return net;
}

/// Metric-entropy dimension estimate log N_eps / (C_cover log T) with
/// eps = T^{-c_eps}, N_eps the greedy net size. A degenerate cloud (all
/// points identical) yields a net of size 1 and therefore estimate 0.
inline double intrinsic_dim_estimate(const PointCloud& cloud, int T,
                                     double c_eps, double C_cover) {
  if (T < 2) throw std::invalid_argument("intrinsic_dim_estimate: T >= 2");
  if (!(c_eps > 0) || !(C_cover > 0))
    throw std::invalid_argument(
        "intrinsic_dim_estimate: c_eps and C_cover must be > 0");
  const double eps = std::pow(double(T), -c_eps);
  const auto net = greedy_epsilon_net(cloud, eps);
  return std::log(double(net.size())) / (C_cover * std::log(double(T)));
}

}  // namespace ddpmlab
