#include "mwmv/rng.hpp"

#include <cmath>

namespace mwmv {

int Rng::categorical_log(const Eigen::VectorXd& log_weights) {
  const double top = log_weights.maxCoeff();
  const Eigen::VectorXd w = (log_weights.array() - top).exp();
  double u = uniform() * w.sum();
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    u -= w(k);
    if (u < 0.0) return static_cast<int>(k);
  }
  return static_cast<int>(w.size() - 1);
}

double Rng::truncated_standard_normal(double lower) {
  if (lower < 0.5) {
    for (;;) {
      const double v = normal();
      if (v > lower) return v;
    }
  }
  // Exponential proposal with the optimal rate for the tail (Robert 1995).
  const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    const double v = lower - std::log1p(-uniform()) / rate;
    const double d = v - rate;
    if (uniform() <= std::exp(-0.5 * d * d)) return v;
  }
}

}  // namespace mwmv
