#include "mwmv/model.hpp"

#include <cmath>
#include <string>

#include "mwmv/errors.hpp"
#include "mwmv/linalg.hpp"

namespace mwmv {

namespace {

void check_positive(const VectorXd& v, const char* what, View view) {
  if (!(v.array() > 0.0).all() || !v.allFinite())
    throw NumericalError(std::string(what) + " must be positive and finite (view " +
                         view_name(view) + ")");
}

/// Collapsed symmetric Dirichlet-multinomial probability of an assignment vector.
double dirichlet_multinomial_log_prob(const std::vector<int>& clusters, int k, double conc) {
  std::vector<int> counts(static_cast<size_t>(k), 0);
  for (int c : clusters) ++counts[static_cast<size_t>(c)];
  const double p = static_cast<double>(clusters.size());
  double r = std::lgamma(k * conc) - std::lgamma(p + k * conc);
  for (int n : counts) r += std::lgamma(n + conc) - std::lgamma(conc);
  return r;
}

template <typename T>
T take(const std::optional<T>& fixed, T drawn) {
  return fixed ? *fixed : std::move(drawn);
}

}  // namespace

ModelState zero_state(const ModelLayout& layout, Eigen::Index n, Eigen::Index p_x,
                      Eigen::Index p_y) {
  ModelState s;
  const int kz = layout.k_z();
  for (View v : kViews) {
    ViewState& vs = s.view(v);
    const Eigen::Index p = v == View::x ? p_x : p_y;
    const int k = layout.k_clusters(v);
    vs.clusters.assign(static_cast<size_t>(p), 0);
    vs.scales = VectorXd::Ones(p);
    vs.resid_var = VectorXd::Ones(p);
    vs.mu = VectorXd::Zero(p);
    vs.w = MatrixXd::Zero(k, kz);
    vs.ard = VectorXd::Ones(kz);
    vs.psi = MatrixXd::Identity(k, k);
    vs.lat = MatrixXd::Zero(n, k);
  }
  s.effects = MatrixXd::Zero(layout.n_effects(), kz);
  s.z = MatrixXd::Zero(n, kz);
  return s;
}

ModelState sample_prior_state(const ModelLayout& layout, const Hyperparameters& hypers,
                              const std::vector<Cell>& design, Eigen::Index p_x,
                              Eigen::Index p_y, Rng& rng, const FixedComponents& fixed) {
  layout.validate();
  for (const auto& c : design)
    if (c.a < 0 || c.b < 0 || c.a > layout.max_a || c.b > layout.max_b)
      throw DesignError("invalid covariate index (" + std::to_string(c.a) + ", " +
                        std::to_string(c.b) + ")");
  const auto n = static_cast<Eigen::Index>(design.size());
  const int kz = layout.k_z();
  ModelState s = zero_state(layout, n, p_x, p_y);

  for (View v : kViews) {
    ViewState& vs = s.view(v);
    const bool is_x = v == View::x;
    const Eigen::Index p = is_x ? p_x : p_y;
    const int k = layout.k_clusters(v);

    // Cluster assignments: pi ~ Dirichlet(conc), v_i ~ Categorical(pi).
    if (const auto& fc = is_x ? fixed.clusters_x : fixed.clusters_y) {
      vs.clusters = *fc;
    } else {
      VectorXd pi(k);
      for (int c = 0; c < k; ++c) pi(c) = rng.gamma(hypers.dirichlet_conc, 1.0);
      if (!(pi.sum() > 0.0)) pi.setOnes();
      const VectorXd log_pi = pi.array().log();
      for (Eigen::Index i = 0; i < p; ++i) vs.clusters[static_cast<size_t>(i)] = rng.categorical_log(log_pi);
    }

    VectorXd scales = VectorXd::Ones(p), mu = VectorXd::Zero(p);
    if (hypers.free_location_scale) {
      const double sd = std::sqrt(hypers.scale_prior_var);
      for (Eigen::Index i = 0; i < p; ++i) {
        const double lower = -hypers.scale_prior_mean / sd;
        scales(i) = hypers.scale_prior_mean + sd * rng.truncated_standard_normal(lower);
        mu(i) = std::sqrt(hypers.location_prior_var) * rng.normal();
      }
    }
    vs.scales = take(is_x ? fixed.scales_x : fixed.scales_y, scales);
    vs.mu = take(is_x ? fixed.mu_x : fixed.mu_y, mu);

    VectorXd resid(p);
    for (Eigen::Index i = 0; i < p; ++i)
      resid(i) = hypers.resid_dof * hypers.resid_scale / rng.chi_squared(hypers.resid_dof);
    vs.resid_var = take(is_x ? fixed.resid_var_x : fixed.resid_var_y, resid);

    VectorXd ard(kz);
    // Structurally zero columns carry no ARD parameter; their entry stays 1.
    for (int l = 0; l < kz; ++l)
      ard(l) = layout.active(v, l) ? rng.inverse_gamma(hypers.ard_shape, hypers.ard_scale) : 1.0;
    vs.ard = take(is_x ? fixed.ard_x : fixed.ard_y, ard);

    MatrixXd w = MatrixXd::Zero(k, kz);
    for (int l = 0; l < kz; ++l) {
      if (!layout.active(v, l)) continue;
      const double sd = std::sqrt(vs.ard(l));
      for (int r = 0; r < k; ++r) w(r, l) = sd * rng.normal();
    }
    vs.w = take(is_x ? fixed.w_x : fixed.w_y, w);

    if (const auto& fp = is_x ? fixed.psi_x : fixed.psi_y)
      vs.psi = *fp;
    else
      vs.psi = sample_inverse_wishart(hypers.iw_scale(v, k), hypers.iw_dof(v, k), rng);
  }

  if (fixed.effects) {
    s.effects = *fixed.effects;
  } else {
    const double sd = std::sqrt(hypers.effect_prior_var);
    for (Eigen::Index e = 0; e < s.effects.rows(); ++e)
      for (int d = 0; d < kz; ++d) s.effects(e, d) = sd * rng.normal();
  }

  s.check_consistent(layout, n, p_x, p_y);

  const MatrixXd means = s.prior_means(layout, design);
  for (Eigen::Index j = 0; j < n; ++j)
    for (int d = 0; d < kz; ++d) s.z(j, d) = means(j, d) + rng.normal();

  for (View v : kViews) {
    ViewState& vs = s.view(v);
    vs.lat = sample_mvn_rows(s.z * vs.w.transpose(), vs.psi, rng);
  }
  return s;
}

MatrixXd sample_view_data(const ModelState& state, View v, Rng& rng) {
  const ViewState& vs = state.view(v);
  const Eigen::Index n = vs.lat.rows();
  const auto p = static_cast<Eigen::Index>(vs.clusters.size());
  MatrixXd out(n, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const int c = vs.clusters[static_cast<size_t>(i)];
    const double sd = std::sqrt(vs.resid_var(i));
    for (Eigen::Index j = 0; j < n; ++j)
      out(j, i) = vs.mu(i) + vs.scales(i) * vs.lat(j, c) + sd * rng.normal();
  }
  return out;
}

std::pair<ModelState, PairedDataset> sample_from_model(const ModelLayout& layout,
                                                       const Hyperparameters& hypers,
                                                       const std::vector<Cell>& design,
                                                       Eigen::Index p_x, Eigen::Index p_y,
                                                       std::uint64_t seed,
                                                       const FixedComponents& fixed) {
  Rng rng(seed);
  ModelState state = sample_prior_state(layout, hypers, design, p_x, p_y, rng, fixed);
  PairedDataset data;
  data.x = sample_view_data(state, View::x, rng);
  data.y = sample_view_data(state, View::y, rng);
  data.covariates = design;
  for (Eigen::Index i = 0; i < p_x; ++i) data.variable_names_x.push_back("x" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < p_y; ++i) data.variable_names_y.push_back("y" + std::to_string(i + 1));
  for (size_t j = 0; j < design.size(); ++j) data.sample_ids.push_back("s" + std::to_string(j + 1));
  return {std::move(state), std::move(data)};
}

LogJointTerms log_joint_terms(const ModelState& state, const PairedDataset& data,
                              const ModelLayout& layout, const Hyperparameters& hypers) {
  state.check_consistent(layout, data.n(), data.x.cols(), data.y.cols());
  LogJointTerms t;
  const int kz = layout.k_z();

  for (Eigen::Index e = 0; e < state.effects.rows(); ++e)
    for (int d = 0; d < kz; ++d)
      t.effects += normal_log_pdf(state.effects(e, d), 0.0, hypers.effect_prior_var);

  const MatrixXd means = state.prior_means(layout, data.covariates);
  t.z = -0.5 * (static_cast<double>(state.z.size()) * kLogTwoPi + (state.z - means).squaredNorm());

  for (View v : kViews) {
    const ViewState& vs = state.view(v);
    const MatrixXd& obs = data.view(v);
    const int k = layout.k_clusters(v);
    check_positive(vs.ard, "ARD variances", v);
    check_positive(vs.resid_var, "residual variances", v);

    for (int l = 0; l < kz; ++l) {
      if (!layout.active(v, l)) continue;
      t.ard += inverse_gamma_log_pdf(vs.ard(l), hypers.ard_shape, hypers.ard_scale);
      for (int r = 0; r < k; ++r) t.w += normal_log_pdf(vs.w(r, l), 0.0, vs.ard(l));
    }

    t.psi += inverse_wishart_log_pdf(vs.psi, hypers.iw_scale(v, k), hypers.iw_dof(v, k));

    const auto psi_llt = spd_cholesky(vs.psi, "psi");
    const MatrixXd resid = vs.lat - state.z * vs.w.transpose();
    const MatrixXd whitened = psi_llt.matrixL().solve(resid.transpose());
    t.latents += -0.5 * (static_cast<double>(resid.size()) * kLogTwoPi +
                         static_cast<double>(resid.rows()) * log_det(psi_llt) +
                         whitened.squaredNorm());

    t.clusters += dirichlet_multinomial_log_prob(vs.clusters, k, hypers.dirichlet_conc);

    for (Eigen::Index i = 0; i < vs.resid_var.size(); ++i)
      t.resid_var += scaled_inv_chi2_log_pdf(vs.resid_var(i), hypers.resid_dof, hypers.resid_scale);

    if (hypers.free_location_scale) {
      check_positive(vs.scales, "scales", v);
      const double sd = std::sqrt(hypers.scale_prior_var);
      const double log_norm = log_normal_cdf(hypers.scale_prior_mean / sd);
      for (Eigen::Index i = 0; i < vs.mu.size(); ++i) {
        t.location_scale += normal_log_pdf(vs.mu(i), 0.0, hypers.location_prior_var);
        t.location_scale +=
            normal_log_pdf(vs.scales(i), hypers.scale_prior_mean, hypers.scale_prior_var) - log_norm;
      }
    }

    for (Eigen::Index i = 0; i < obs.cols(); ++i) {
      const int c = vs.clusters[static_cast<size_t>(i)];
      const double var = vs.resid_var(i);
      const double ssr =
          (obs.col(i).array() - vs.mu(i) - vs.scales(i) * vs.lat.col(c).array()).square().sum();
      t.data += -0.5 * (static_cast<double>(obs.rows()) * (kLogTwoPi + std::log(var)) + ssr / var);
    }
  }
  return t;
}

double log_joint(const ModelState& state, const PairedDataset& data, const ModelLayout& layout,
                 const Hyperparameters& hypers) {
  return log_joint_terms(state, data, layout, hypers).total();
}

double sample_log_terms(const ModelState& state, const PairedDataset& data,
                        const ModelLayout& layout, Eigen::Index j) {
  const Cell cell = data.covariates[static_cast<size_t>(j)];
  const VectorXd zr = state.z.row(j).transpose() - state.population_mean(layout, cell);
  double total = -0.5 * (static_cast<double>(zr.size()) * kLogTwoPi + zr.squaredNorm());
  for (View v : kViews) {
    const ViewState& vs = state.view(v);
    const auto psi_llt = spd_cholesky(vs.psi, "psi");
    const VectorXd r = vs.lat.row(j).transpose() - vs.w * state.z.row(j).transpose();
    total += -0.5 * (static_cast<double>(r.size()) * kLogTwoPi + log_det(psi_llt) +
                     psi_llt.matrixL().solve(r).squaredNorm());
    const MatrixXd& obs = data.view(v);
    for (Eigen::Index i = 0; i < obs.cols(); ++i) {
      const double mean = vs.mu(i) + vs.scales(i) * vs.lat(j, vs.clusters[static_cast<size_t>(i)]);
      total += normal_log_pdf(obs(j, i), mean, vs.resid_var(i));
    }
  }
  return total;
}

MatrixXd log_joint_grad_w(const ModelState& state, const ModelLayout& layout, View v) {
  const ViewState& vs = state.view(v);
  const auto psi_llt = spd_cholesky(vs.psi, "psi");
  const MatrixXd resid = vs.lat - state.z * vs.w.transpose();
  MatrixXd grad = psi_llt.solve(resid.transpose() * state.z);
  for (int l = 0; l < layout.k_z(); ++l) {
    if (layout.active(v, l))
      grad.col(l) -= vs.w.col(l) / vs.ard(l);
    else
      grad.col(l).setZero();
  }
  return grad;
}

MatrixXd projection_matrix(const ViewState& vs, int k_clusters) {
  const auto p = static_cast<Eigen::Index>(vs.clusters.size());
  MatrixXd v = MatrixXd::Zero(p, k_clusters);
  for (Eigen::Index i = 0; i < p; ++i) v(i, vs.clusters[static_cast<size_t>(i)]) = vs.scales(i);
  return v;
}

namespace {

/// Joint covariance of [x_lat; y_lat] after integrating z out.
MatrixXd latent_covariance(const ModelState& s) {
  const Eigen::Index kx = s.x.w.rows(), ky = s.y.w.rows();
  MatrixXd w(kx + ky, s.x.w.cols());
  w << s.x.w, s.y.w;
  MatrixXd c = w * w.transpose();
  c.topLeftCorner(kx, kx) += s.x.psi;
  c.bottomRightCorner(ky, ky) += s.y.psi;
  return c;
}

}  // namespace

PopulationMarginal population_marginal(const ModelState& state, const ModelLayout& layout,
                                       Cell population) {
  const VectorXd m = state.population_mean(layout, population);
  const MatrixXd vx = projection_matrix(state.x, layout.k_clusters_x);
  const MatrixXd vy = projection_matrix(state.y, layout.k_clusters_y);
  const Eigen::Index px = vx.rows(), py = vy.rows();
  const Eigen::Index kx = vx.cols(), ky = vy.cols();

  MatrixXd g = MatrixXd::Zero(px + py, kx + ky);
  g.topLeftCorner(px, kx) = vx;
  g.bottomRightCorner(py, ky) = vy;

  PopulationMarginal out;
  out.p_x = px;
  out.mean.resize(px + py);
  out.mean.head(px) = state.x.mu + vx * (state.x.w * m);
  out.mean.tail(py) = state.y.mu + vy * (state.y.w * m);
  out.cov = g * latent_covariance(state) * g.transpose();
  out.cov.diagonal().head(px) += state.x.resid_var;
  out.cov.diagonal().tail(py) += state.y.resid_var;
  return out;
}

MarginalScorer::MarginalScorer(const ModelState& state, const ModelLayout& layout)
    : state_(state), layout_(layout) {
  const Eigen::Index kx = layout.k_clusters_x, ky = layout.k_clusters_y;
  const MatrixXd c = latent_covariance(state);

  auto make_part = [](const MatrixXd& cov, const VectorXd& d, const VectorXd& resid_var) {
    Part part;
    part.dim = cov.rows();
    const auto c_llt = spd_cholesky(cov, "latent covariance");
    MatrixXd inner = c_llt.solve(MatrixXd::Identity(cov.rows(), cov.rows()));
    inner.diagonal() += d;
    part.inner = spd_cholesky(inner, "marginal inner matrix");
    part.log_det = resid_var.array().log().sum() + log_det(c_llt) + log_det(part.inner);
    return part;
  };

  auto loading_precision = [](const ViewState& vs, Eigen::Index k) {
    VectorXd d = VectorXd::Zero(k);
    for (size_t i = 0; i < vs.clusters.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      d(vs.clusters[i]) += vs.scales(ii) * vs.scales(ii) / vs.resid_var(ii);
    }
    return d;
  };
  const VectorXd dx = loading_precision(state.x, kx), dy = loading_precision(state.y, ky);
  VectorXd d(kx + ky), rv(state.x.resid_var.size() + state.y.resid_var.size());
  d << dx, dy;
  rv << state.x.resid_var, state.y.resid_var;

  joint_ = make_part(c, d, rv);
  x_ = make_part(c.topLeftCorner(kx, kx), dx, state.x.resid_var);
  y_ = make_part(c.bottomRightCorner(ky, ky), dy, state.y.resid_var);
}

MarginalLogDensity MarginalScorer::score(const VectorXd& x_row, const VectorXd& y_row,
                                         Cell population) const {
  const VectorXd m = state_.population_mean(layout_, population);

  // Residual energy and loading projection b = G' Lambda^-1 r per view.
  auto view_terms = [&](const ViewState& vs, const VectorXd& row, Eigen::Index k,
                        double& quad, VectorXd& b) {
    const VectorXd lat_mean = vs.w * m;
    quad = 0.0;
    b = VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < row.size(); ++i) {
      const int c = vs.clusters[static_cast<size_t>(i)];
      const double r = row(i) - vs.mu(i) - vs.scales(i) * lat_mean(c);
      quad += r * r / vs.resid_var(i);
      b(c) += vs.scales(i) * r / vs.resid_var(i);
    }
  };

  double qx = 0.0, qy = 0.0;
  VectorXd bx, by;
  view_terms(state_.x, x_row, layout_.k_clusters_x, qx, bx);
  view_terms(state_.y, y_row, layout_.k_clusters_y, qy, by);

  auto density = [](const Part& part, double quad, const VectorXd& b, Eigen::Index p) {
    const double q = quad - b.dot(part.inner.solve(b));
    return -0.5 * (static_cast<double>(p) * kLogTwoPi + part.log_det + q);
  };

  VectorXd b(bx.size() + by.size());
  b << bx, by;
  MarginalLogDensity out;
  out.joint = density(joint_, qx + qy, b, x_row.size() + y_row.size());
  out.x = density(x_, qx, bx, x_row.size());
  out.y = density(y_, qy, by, y_row.size());
  return out;
}

}  // namespace mwmv
