#include "mwmv/conditionals.hpp"

#include <cmath>

#include "mwmv/errors.hpp"

namespace mwmv {

VectorXd InverseGammaVector::sample(Rng& rng) const {
  VectorXd out(shape.size());
  for (Eigen::Index i = 0; i < shape.size(); ++i) out(i) = rng.inverse_gamma(shape(i), scale(i));
  return out;
}

double InverseGammaVector::log_density(const VectorXd& value) const {
  double total = 0.0;
  for (Eigen::Index i = 0; i < shape.size(); ++i)
    total += inverse_gamma_log_pdf(value(i), shape(i), scale(i));
  return total;
}

MatrixXd InverseWishart::sample(Rng& rng) const { return sample_inverse_wishart(scale, dof, rng); }

double InverseWishart::log_density(const MatrixXd& value) const {
  return inverse_wishart_log_pdf(value, scale, dof);
}

MatrixXd WConditional::sample(const MatrixXd& current, Rng& rng) const {
  MatrixXd out = current;
  const MatrixXd draw = gaussian.sample(rng);
  for (size_t f = 0; f < free.size(); ++f)
    out(free[f] % k_clusters, free[f] / k_clusters) = draw(0, static_cast<Eigen::Index>(f));
  return out;
}

double WConditional::log_density(const MatrixXd& w) const {
  MatrixXd row(1, static_cast<Eigen::Index>(free.size()));
  for (size_t f = 0; f < free.size(); ++f)
    row(0, static_cast<Eigen::Index>(f)) = w(free[f] % k_clusters, free[f] / k_clusters);
  return gaussian.log_density(row);
}

std::pair<VectorXd, VectorXd> LocationScaleConditional::sample(Rng& rng) const {
  const auto p = static_cast<Eigen::Index>(mean.size());
  VectorXd mu(p), scales(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& prec = precision[static_cast<size_t>(i)];
    const auto& m = mean[static_cast<size_t>(i)];
    const Eigen::Matrix2d cov = prec.inverse();
    const double sd = std::sqrt(cov(1, 1));
    scales(i) = m(1) + sd * rng.truncated_standard_normal(-m(1) / sd);
    const double cond_mean = m(0) - prec(0, 1) * (scales(i) - m(1)) / prec(0, 0);
    mu(i) = cond_mean + rng.normal() / std::sqrt(prec(0, 0));
  }
  return {mu, scales};
}

double LocationScaleConditional::log_density(const VectorXd& mu, const VectorXd& scales) const {
  double total = 0.0;
  for (size_t i = 0; i < mean.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const Eigen::Vector2d d(mu(ii) - mean[i](0), scales(ii) - mean[i](1));
    const Eigen::Matrix2d& prec = precision[i];
    const double sd = std::sqrt(prec.inverse()(1, 1));
    total += -kLogTwoPi + 0.5 * std::log(prec.determinant()) - 0.5 * d.dot(prec * d) -
             log_normal_cdf(mean[i](1) / sd);
  }
  return total;
}

std::vector<int> free_dims(const ModelLayout& layout, const FrozenDims& frozen) {
  std::vector<int> out;
  for (int d = 0; d < layout.k_z(); ++d)
    if (frozen.empty() || !frozen[static_cast<size_t>(d)]) out.push_back(d);
  return out;
}

SharedPrecisionGaussian z_conditional(const ModelState& s, const ModelLayout& layout,
                                      const std::vector<Cell>& design, const FrozenDims& frozen) {
  const int kz = layout.k_z();
  MatrixXd precision = MatrixXd::Identity(kz, kz);
  MatrixXd linear = s.prior_means(layout, design);
  for (View v : kViews) {
    const ViewState& vs = s.view(v);
    const auto psi_llt = spd_cholesky(vs.psi, "psi");
    const MatrixXd psi_inv_w = psi_llt.solve(vs.w);
    precision += vs.w.transpose() * psi_inv_w;
    linear += vs.lat * psi_inv_w;
  }
  precision = 0.5 * (precision + precision.transpose());
  return restrict_canonical(precision, linear, free_dims(layout, frozen), s.z,
                            "z conditional precision");
}

SharedPrecisionGaussian effects_conditional(const ModelState& s, const ModelLayout& layout,
                                            const std::vector<Cell>& design,
                                            const Hyperparameters& hypers,
                                            const FrozenDims& frozen) {
  const int ne = layout.n_effects();
  MatrixXd precision = MatrixXd::Identity(ne, ne) / hypers.effect_prior_var;
  MatrixXd dtz = MatrixXd::Zero(ne, layout.k_z());
  for (size_t j = 0; j < design.size(); ++j) {
    const auto rows = layout.effects_for(design[j]);
    for (int e : rows) {
      dtz.row(e) += s.z.row(static_cast<Eigen::Index>(j));
      for (int f : rows) precision(e, f) += 1.0;
    }
  }
  const std::vector<int> dims = free_dims(layout, frozen);
  MatrixXd linear(static_cast<Eigen::Index>(dims.size()), ne);
  for (size_t r = 0; r < dims.size(); ++r)
    linear.row(static_cast<Eigen::Index>(r)) = dtz.col(dims[r]).transpose();
  return SharedPrecisionGaussian(precision, linear, "effects conditional precision");
}

SharedPrecisionGaussian effects_marginal_conditional(const ModelState& s, const ModelLayout& layout,
                                                     const std::vector<Cell>& design,
                                                     const Hyperparameters& hypers,
                                                     const FrozenDims& frozen) {
  // Stacked factor scores lat_j = W z_j + e_j with e_j ~ N(0, blockdiag(psi)).
  // Integrating the free z coordinates gives lat_j ~ N(W_f m_f + W_r z_r, S)
  // with S = blockdiag(psi) + W_f W_f'.
  const std::vector<int> dims = free_dims(layout, frozen);
  std::vector<int> fixed;
  for (int d = 0; d < layout.k_z(); ++d)
    if (!frozen.empty() && frozen[static_cast<size_t>(d)]) fixed.push_back(d);
  const Eigen::Index kx = s.x.w.rows(), ky = s.y.w.rows(), k = kx + ky;
  MatrixXd w(k, layout.k_z());
  w << s.x.w, s.y.w;
  MatrixXd lat(s.z.rows(), k);
  lat << s.x.lat, s.y.lat;
  const MatrixXd w_f = w(Eigen::all, dims);
  if (!fixed.empty()) lat -= s.z(Eigen::all, fixed) * w(Eigen::all, fixed).transpose();
  MatrixXd cov = MatrixXd::Zero(k, k);
  cov.topLeftCorner(kx, kx) = s.x.psi;
  cov.bottomRightCorner(ky, ky) = s.y.psi;
  cov += w_f * w_f.transpose();
  const auto llt = spd_cholesky(cov, "marginal factor score covariance");
  const MatrixXd cinv_w = llt.solve(w_f);
  const MatrixXd g = w_f.transpose() * cinv_w;
  const MatrixXd proj = lat * cinv_w;  // n x kf

  const int ne = layout.n_effects();
  const auto kf = static_cast<Eigen::Index>(dims.size());
  MatrixXd counts = MatrixXd::Zero(ne, ne);
  MatrixXd b = MatrixXd::Zero(ne, kf);
  for (size_t j = 0; j < design.size(); ++j) {
    const auto rows = layout.effects_for(design[j]);
    for (int e : rows) {
      b.row(e) += proj.row(static_cast<Eigen::Index>(j));
      for (int f : rows) counts(e, f) += 1.0;
    }
  }
  // Value is vec of the kf x ne block, column-major: r + kf * e.
  const Eigen::Index dim = kf * ne;
  MatrixXd precision = MatrixXd::Identity(dim, dim) / hypers.effect_prior_var;
  for (int e = 0; e < ne; ++e)
    for (int f = 0; f < ne; ++f)
      precision.block(e * kf, f * kf, kf, kf) += counts(e, f) * g;
  precision = 0.5 * (precision + precision.transpose());
  const MatrixXd linear = b.transpose().reshaped(1, dim);
  return SharedPrecisionGaussian(precision, linear, "marginal effects precision");
}

SharedPrecisionGaussian latents_conditional(const ModelState& s, const PairedDataset& data,
                                            View v) {
  const ViewState& vs = s.view(v);
  const MatrixXd& obs = data.view(v);
  const Eigen::Index k = vs.psi.rows();
  const auto psi_llt = spd_cholesky(vs.psi, "psi");
  MatrixXd precision = psi_llt.solve(MatrixXd::Identity(k, k));
  MatrixXd linear = s.z * psi_llt.solve(vs.w).transpose();
  for (Eigen::Index i = 0; i < obs.cols(); ++i) {
    const int c = vs.clusters[static_cast<size_t>(i)];
    const double weight = vs.scales(i) / vs.resid_var(i);
    precision(c, c) += weight * vs.scales(i);
    linear.col(c) += weight * (obs.col(i).array() - vs.mu(i)).matrix();
  }
  precision = 0.5 * (precision + precision.transpose());
  return SharedPrecisionGaussian(precision, linear, "factor score conditional precision");
}

WConditional w_conditional(const ModelState& s, const ModelLayout& layout, View v,
                           const FrozenDims& frozen) {
  const ViewState& vs = s.view(v);
  const int k = layout.k_clusters(v);
  const int kz = layout.k_z();
  const auto psi_llt = spd_cholesky(vs.psi, "psi");
  const MatrixXd psi_inv = psi_llt.solve(MatrixXd::Identity(k, k));
  const MatrixXd ztz = s.z.transpose() * s.z;

  // vec(W) precision is (Z'Z) kron psi^-1 plus the ARD diagonal.
  const int dim = k * kz;
  MatrixXd precision(dim, dim);
  for (int l = 0; l < kz; ++l)
    for (int m = 0; m < kz; ++m) precision.block(l * k, m * k, k, k) = ztz(l, m) * psi_inv;
  for (int l = 0; l < kz; ++l)
    for (int r = 0; r < k; ++r) precision(l * k + r, l * k + r) += 1.0 / vs.ard(l);
  const MatrixXd lin = psi_inv * vs.lat.transpose() * s.z;  // k x kz
  const MatrixXd linear = lin.reshaped(1, dim);

  WConditional out;
  out.k_clusters = k;
  for (int l = 0; l < kz; ++l) {
    if (!layout.active(v, l) || (!frozen.empty() && frozen[static_cast<size_t>(l)])) continue;
    for (int r = 0; r < k; ++r) out.free.push_back(l * k + r);
  }
  const MatrixXd current = vs.w.reshaped(1, dim);
  if (!out.free.empty())
    out.gaussian = restrict_canonical(precision, linear, out.free, current, "W conditional precision");
  return out;
}

InverseGammaVector ard_conditional(const ModelState& s, const ModelLayout& layout,
                                   const Hyperparameters& hypers, View v) {
  const ViewState& vs = s.view(v);
  const int kz = layout.k_z();
  InverseGammaVector out{VectorXd::Constant(kz, hypers.ard_shape),
                         VectorXd::Constant(kz, hypers.ard_scale)};
  for (int l = 0; l < kz; ++l) {
    if (!layout.active(v, l)) continue;
    out.shape(l) += 0.5 * static_cast<double>(vs.w.rows());
    out.scale(l) += 0.5 * vs.w.col(l).squaredNorm();
  }
  return out;
}

InverseWishart psi_conditional(const ModelState& s, const ModelLayout& layout,
                               const Hyperparameters& hypers, View v) {
  const ViewState& vs = s.view(v);
  const int k = layout.k_clusters(v);
  const MatrixXd resid = vs.lat - s.z * vs.w.transpose();
  MatrixXd scale = hypers.iw_scale(v, k) + resid.transpose() * resid;
  scale = 0.5 * (scale + scale.transpose());
  return {scale, hypers.iw_dof(v, k) + static_cast<double>(resid.rows())};
}

VectorXd cluster_log_weights(const VectorXd& counts_without_i, const VectorXd& cross,
                             const VectorXd& energy, double scale, double resid_var,
                             double conc) {
  const VectorXd logp =
      (counts_without_i.array() + conc).log() -
      (scale * scale * energy.array() - 2.0 * scale * cross.array()) / (2.0 * resid_var);
  const double top = logp.maxCoeff();
  const double lse = top + std::log((logp.array() - top).exp().sum());
  return logp.array() - lse;
}

VectorXd cluster_log_probs(const ModelState& s, const PairedDataset& data,
                           const Hyperparameters& hypers, View v, Eigen::Index i) {
  const ViewState& vs = s.view(v);
  const MatrixXd& obs = data.view(v);
  const Eigen::Index k = vs.psi.rows();
  VectorXd counts = VectorXd::Zero(k);
  for (size_t r = 0; r < vs.clusters.size(); ++r)
    if (static_cast<Eigen::Index>(r) != i) counts(vs.clusters[r]) += 1.0;

  const VectorXd centered = obs.col(i).array() - vs.mu(i);
  const VectorXd cross = vs.lat.transpose() * centered;
  const VectorXd energy = vs.lat.colwise().squaredNorm().transpose();
  return cluster_log_weights(counts, cross, energy, vs.scales(i), vs.resid_var(i),
                             hypers.dirichlet_conc);
}

InverseGammaVector resid_var_conditional(const ModelState& s, const PairedDataset& data,
                                         const Hyperparameters& hypers, View v) {
  const ViewState& vs = s.view(v);
  const MatrixXd& obs = data.view(v);
  const auto p = obs.cols();
  const double n = static_cast<double>(obs.rows());
  InverseGammaVector out{VectorXd::Constant(p, 0.5 * (hypers.resid_dof + n)), VectorXd(p)};
  for (Eigen::Index i = 0; i < p; ++i) {
    const int c = vs.clusters[static_cast<size_t>(i)];
    const double ssr =
        (obs.col(i).array() - vs.mu(i) - vs.scales(i) * vs.lat.col(c).array()).square().sum();
    out.scale(i) = 0.5 * (hypers.resid_dof * hypers.resid_scale + ssr);
  }
  return out;
}

LocationScaleConditional location_scale_conditional(const ModelState& s,
                                                    const PairedDataset& data,
                                                    const Hyperparameters& hypers, View v) {
  const ViewState& vs = s.view(v);
  const MatrixXd& obs = data.view(v);
  const double n = static_cast<double>(obs.rows());
  LocationScaleConditional out;
  out.precision.reserve(static_cast<size_t>(obs.cols()));
  out.mean.reserve(static_cast<size_t>(obs.cols()));
  for (Eigen::Index i = 0; i < obs.cols(); ++i) {
    const auto lat = vs.lat.col(vs.clusters[static_cast<size_t>(i)]);
    const double inv_var = 1.0 / vs.resid_var(i);
    Eigen::Matrix2d prec;
    prec << 1.0 / hypers.location_prior_var + n * inv_var, lat.sum() * inv_var,
        lat.sum() * inv_var, 1.0 / hypers.scale_prior_var + lat.squaredNorm() * inv_var;
    const Eigen::Vector2d h(obs.col(i).sum() * inv_var,
                            hypers.scale_prior_mean / hypers.scale_prior_var +
                                obs.col(i).dot(lat) * inv_var);
    out.precision.push_back(prec);
    out.mean.push_back(prec.ldlt().solve(h));
  }
  return out;
}

}  // namespace mwmv
