#include "mwmv/linalg.hpp"

#include <cmath>
#include <string>

#include "mwmv/errors.hpp"

namespace mwmv {

Eigen::LLT<MatrixXd> spd_cholesky(const MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw NumericalError(std::string(what) + ": matrix not square");
  if (!m.allFinite()) throw NumericalError(std::string(what) + ": non-finite entries");
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": matrix not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double log_mvgamma(int d, double x) {
  double r = 0.25 * d * (d - 1) * std::log(M_PI);
  for (int j = 0; j < d; ++j) r += std::lgamma(x - 0.5 * j);
  return r;
}

double normal_log_pdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + r * r / var);
}

double inverse_gamma_log_pdf(double x, double shape, double scale) {
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double scaled_inv_chi2_log_pdf(double x, double dof, double scale_sq) {
  const double h = 0.5 * dof;
  return h * std::log(h * scale_sq) - std::lgamma(h) - (h + 1.0) * std::log(x) -
         h * scale_sq / x;
}

double inverse_wishart_log_pdf(const MatrixXd& psi, const MatrixXd& scale, double dof) {
  const int d = static_cast<int>(psi.rows());
  const auto psi_llt = spd_cholesky(psi, "inverse-Wishart argument");
  const auto scale_llt = spd_cholesky(scale, "inverse-Wishart scale");
  const double trace = psi_llt.solve(scale).trace();
  return 0.5 * dof * log_det(scale_llt) - 0.5 * dof * d * std::log(2.0) -
         log_mvgamma(d, 0.5 * dof) - 0.5 * (dof + d + 1.0) * log_det(psi_llt) - 0.5 * trace;
}

MatrixXd sample_inverse_wishart(const MatrixXd& scale, double dof, Rng& rng) {
  // Bartlett: precision = L A A' L' ~ Wishart(scale^-1, dof), L = chol(scale^-1).
  const Eigen::Index d = scale.rows();
  const MatrixXd scale_inv = spd_cholesky(scale, "inverse-Wishart scale").solve(MatrixXd::Identity(d, d));
  const MatrixXd l = spd_cholesky(scale_inv, "inverse-Wishart scale inverse").matrixL();
  MatrixXd a = MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const MatrixXd la = l * a;  // lower triangular
  // psi = (la la')^-1 = la^-T la^-1
  const MatrixXd la_inv =
      la.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(d, d));
  MatrixXd psi = la_inv.transpose() * la_inv;
  return 0.5 * (psi + psi.transpose());
}

MatrixXd sample_mvn_rows(const MatrixXd& means, const MatrixXd& cov, Rng& rng) {
  const MatrixXd l = spd_cholesky(cov, "normal covariance").matrixL();
  MatrixXd out = means;
  for (Eigen::Index r = 0; r < means.rows(); ++r)
    out.row(r) += (l * rng.normal_vector(cov.rows())).transpose();
  return out;
}

double log_normal_cdf(double x) {
  if (x > -5.0) return std::log(0.5 * std::erfc(-x / M_SQRT2));
  // Asymptotic series for the Mills ratio in the far lower tail.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2) +
                        105.0 / (x2 * x2 * x2 * x2);
  return -0.5 * x2 - std::log(-x) - 0.5 * kLogTwoPi + std::log(series);
}

SharedPrecisionGaussian::SharedPrecisionGaussian(const MatrixXd& precision,
                                                 const MatrixXd& linear_rows, const char* what)
    : precision_(precision), llt_(spd_cholesky(precision, what)) {
  means_ = llt_.solve(linear_rows.transpose()).transpose();
}

MatrixXd SharedPrecisionGaussian::sample(Rng& rng) const {
  // x = mean + U^-1 e with P = U'U, so cov(x) = P^-1.
  MatrixXd out = means_;
  const auto upper = llt_.matrixU();
  for (Eigen::Index r = 0; r < means_.rows(); ++r) {
    const VectorXd e = rng.normal_vector(dim());
    out.row(r) += upper.solve(e).transpose();
  }
  return out;
}

double SharedPrecisionGaussian::log_density(const MatrixXd& value) const {
  const double half_log_det = 0.5 * log_det(llt_);
  const auto upper = llt_.matrixU();
  double total = 0.0;
  for (Eigen::Index r = 0; r < value.rows(); ++r) {
    const VectorXd d = (value.row(r) - means_.row(r)).transpose();
    total += -0.5 * dim() * kLogTwoPi + half_log_det - 0.5 * (upper * d).squaredNorm();
  }
  return total;
}

SharedPrecisionGaussian restrict_canonical(const MatrixXd& precision,
                                           const MatrixXd& linear_rows,
                                           const std::vector<int>& free,
                                           const MatrixXd& current, const char* what) {
  const Eigen::Index d = precision.rows();
  std::vector<int> fixed;
  std::vector<bool> is_free(static_cast<size_t>(d), false);
  for (int f : free) is_free[static_cast<size_t>(f)] = true;
  for (int i = 0; i < d; ++i)
    if (!is_free[static_cast<size_t>(i)]) fixed.push_back(i);

  MatrixXd p_ff = precision(free, free);
  MatrixXd h = linear_rows(Eigen::all, free);
  if (!fixed.empty()) {
    const MatrixXd p_fx = precision(free, fixed);
    h -= current(Eigen::all, fixed) * p_fx.transpose();
  }
  return SharedPrecisionGaussian(p_ff, h, what);
}

}  // namespace mwmv
