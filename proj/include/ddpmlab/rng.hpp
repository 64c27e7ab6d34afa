#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace ddpmlab {

/// SplitMix64 finalizer. Used everywhere a child seed is derived from a
/// master seed: child = mix_seed(master, index). The mapping is fixed so
/// that sweeps and ensemble partitions are reproducible and independent of
/// execution order.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Standard-normal stream over mt19937_64. Reproducible within one
/// implementation; cross-implementation reproducibility is statistical only.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

  double operator()() { return normal_(gen_); }

  template <typename Derived>
  void fill(Eigen::PlainObjectBase<Derived>& x) {
    double* p = x.data();
    for (Eigen::Index i = 0; i < x.size(); ++i) p[i] = normal_(gen_);
  }

  std::mt19937_64& generator() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_;
};

}  // namespace ddpmlab
