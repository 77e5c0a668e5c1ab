#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mwmv/rng.hpp"

namespace mwmv {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

/// Cholesky factor of an SPD matrix; throws NumericalError naming `what`.
Eigen::LLT<MatrixXd> spd_cholesky(const MatrixXd& m, const char* what);

double log_det(const Eigen::LLT<MatrixXd>& llt);

/// log of the multivariate gamma function Gamma_d(x).
double log_mvgamma(int d, double x);

double normal_log_pdf(double x, double mean, double var);
double inverse_gamma_log_pdf(double x, double shape, double scale);
/// Scaled inverse chi-squared with `dof` degrees of freedom and scale s^2.
double scaled_inv_chi2_log_pdf(double x, double dof, double scale_sq);
double inverse_wishart_log_pdf(const MatrixXd& psi, const MatrixXd& scale, double dof);

MatrixXd sample_inverse_wishart(const MatrixXd& scale, double dof, Rng& rng);
MatrixXd sample_mvn_rows(const MatrixXd& means, const MatrixXd& cov, Rng& rng);

/// Log of the standard normal CDF, stable in the lower tail.
double log_normal_cdf(double x);

/// Independent Gaussian rows sharing one precision matrix. Row r of `means`
/// is the mean of row r of the value.
class SharedPrecisionGaussian {
 public:
  SharedPrecisionGaussian() = default;
  /// From canonical form: precision P and linear terms H, mean_r = P^-1 h_r.
  SharedPrecisionGaussian(const MatrixXd& precision, const MatrixXd& linear_rows,
                          const char* what);

  const MatrixXd& means() const { return means_; }
  const MatrixXd& precision() const { return precision_; }
  Eigen::Index dim() const { return precision_.rows(); }

  MatrixXd sample(Rng& rng) const;
  double log_density(const MatrixXd& value) const;

 private:
  MatrixXd precision_;
  Eigen::LLT<MatrixXd> llt_;
  MatrixXd means_;
};

/// Conditional of the `free` coordinates of a canonical-form Gaussian given
/// the remaining coordinates at `current` (one row per independent vector).
SharedPrecisionGaussian restrict_canonical(const MatrixXd& precision,
                                           const MatrixXd& linear_rows,
                                           const std::vector<int>& free,
                                           const MatrixXd& current, const char* what);

}  // namespace mwmv
