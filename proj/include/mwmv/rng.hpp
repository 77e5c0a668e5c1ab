#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace mwmv {

/// Seeded random source. All draws in the library go through one of these so a
/// run is reproducible from its seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }

  /// Gamma with shape k and scale theta (mean k * theta).
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }
  double chi_squared(double dof) { return gamma(0.5 * dof, 2.0); }

  /// Inverse gamma with density proportional to x^(-shape-1) exp(-scale / x).
  double inverse_gamma(double shape, double scale) { return scale / gamma(shape, 1.0); }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  /// Index drawn with probability proportional to exp(log_weights).
  int categorical_log(const Eigen::VectorXd& log_weights);

  /// Standard normal truncated to (lower, inf).
  double truncated_standard_normal(double lower);

  std::uint64_t next_seed() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mwmv
