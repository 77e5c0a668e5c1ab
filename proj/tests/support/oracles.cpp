#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

#include "mwmv/conditionals.hpp"
#include "mwmv/diagnostics.hpp"
#include "mwmv/model.hpp"

namespace mwmv::oracle {

namespace {

std::vector<Cell> small_design(int n) {
  std::vector<Cell> design;
  for (int j = 0; j < n; ++j) design.push_back({(j / 2) % 2, j % 2});
  return design;
}

Hyperparameters proper_hypers(bool free_location_scale) {
  Hyperparameters h;
  h.ard_shape = 3.0;
  h.ard_scale = 2.0;
  h.resid_dof = 6.0;
  h.resid_scale = 0.5;
  h.free_location_scale = free_location_scale;
  h.location_prior_var = 4.0;
  return h;
}

double joint(const Instance& inst, const ModelState& s) {
  return log_joint(s, inst.data, inst.layout, inst.hypers);
}

double gap_for(Instance& inst, Block block, Rng& rng, const FrozenDims& frozen) {
  const ModelState& s = inst.state;
  ModelState t = s;
  const PairedDataset& data = inst.data;
  const ModelLayout& layout = inst.layout;
  const Hyperparameters& hypers = inst.hypers;
  double dq = 0.0;
  const View v = rng.uniform() < 0.5 ? View::x : View::y;
  switch (block) {
    case Block::clusters: {
      const auto p = static_cast<Eigen::Index>(s.view(v).clusters.size());
      const auto i = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(p)) % p;
      const VectorXd logp = cluster_log_probs(s, data, hypers, v, i);
      const int from = s.view(v).clusters[static_cast<size_t>(i)];
      const int to = static_cast<int>(rng.uniform() * static_cast<double>(logp.size())) %
                     static_cast<int>(logp.size());
      t.view(v).clusters[static_cast<size_t>(i)] = to;
      dq = logp(to) - logp(from);
      break;
    }
    case Block::resid_var: {
      const auto q = resid_var_conditional(s, data, hypers, v);
      t.view(v).resid_var = q.sample(rng);
      dq = q.log_density(t.view(v).resid_var) - q.log_density(s.view(v).resid_var);
      break;
    }
    case Block::location_scale: {
      const auto q = location_scale_conditional(s, data, hypers, v);
      auto [mu, scales] = q.sample(rng);
      t.view(v).mu = mu;
      t.view(v).scales = scales;
      dq = q.log_density(mu, scales) - q.log_density(s.view(v).mu, s.view(v).scales);
      break;
    }
    case Block::latents: {
      const auto q = latents_conditional(s, data, v);
      t.view(v).lat = q.sample(rng);
      dq = q.log_density(t.view(v).lat) - q.log_density(s.view(v).lat);
      break;
    }
    case Block::w: {
      const auto q = w_conditional(s, layout, v, frozen);
      t.view(v).w = q.sample(s.view(v).w, rng);
      dq = q.log_density(t.view(v).w) - q.log_density(s.view(v).w);
      break;
    }
    case Block::ard: {
      const auto q = ard_conditional(s, layout, hypers, v);
      const VectorXd draw = q.sample(rng);
      for (int l = 0; l < layout.k_z(); ++l)
        if (layout.active(v, l) && (frozen.empty() || !frozen[static_cast<size_t>(l)]))
          t.view(v).ard(l) = draw(l);
      dq = q.log_density(t.view(v).ard) - q.log_density(s.view(v).ard);
      break;
    }
    case Block::psi: {
      const auto q = psi_conditional(s, layout, hypers, v);
      t.view(v).psi = q.sample(rng);
      dq = q.log_density(t.view(v).psi) - q.log_density(s.view(v).psi);
      break;
    }
    case Block::z: {
      const auto q = z_conditional(s, layout, data.covariates, frozen);
      const auto dims = free_dims(layout, frozen);
      const MatrixXd draw = q.sample(rng);
      MatrixXd before(s.z.rows(), static_cast<Eigen::Index>(dims.size()));
      for (size_t r = 0; r < dims.size(); ++r) {
        before.col(static_cast<Eigen::Index>(r)) = s.z.col(dims[r]);
        t.z.col(dims[r]) = draw.col(static_cast<Eigen::Index>(r));
      }
      dq = q.log_density(draw) - q.log_density(before);
      break;
    }
    case Block::effects: {
      const auto q = effects_conditional(s, layout, data.covariates, hypers, frozen);
      const auto dims = free_dims(layout, frozen);
      const MatrixXd draw = q.sample(rng);
      MatrixXd before(static_cast<Eigen::Index>(dims.size()), s.effects.rows());
      for (size_t r = 0; r < dims.size(); ++r) {
        before.row(static_cast<Eigen::Index>(r)) = s.effects.col(dims[r]).transpose();
        t.effects.col(dims[r]) = draw.row(static_cast<Eigen::Index>(r)).transpose();
      }
      dq = q.log_density(draw) - q.log_density(before);
      break;
    }
  }
  t.check_consistent(layout, data.n(), data.x.cols(), data.y.cols());
  const double dp = joint(inst, t) - joint(inst, s);
  return std::abs(dq - dp);
}

MatrixXd view_projection(const ViewState& vs, Eigen::Index k) {
  const auto p = static_cast<Eigen::Index>(vs.clusters.size());
  MatrixXd v = MatrixXd::Zero(p, k);
  for (Eigen::Index i = 0; i < p; ++i) v(i, vs.clusters[static_cast<size_t>(i)]) = vs.scales(i);
  return v;
}

}  // namespace

double mvn_log_density(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov) {
  const Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("oracle covariance not SPD");
  const VectorXd r = llt.matrixL().solve(x - mean);
  const MatrixXd l = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * M_PI) + log_det + r.squaredNorm());
}

MatrixXd dense_population_cov(const ModelState& s) {
  const MatrixXd vx = view_projection(s.x, s.x.w.rows());
  const MatrixXd vy = view_projection(s.y, s.y.w.rows());
  const Eigen::Index px = vx.rows(), py = vy.rows();
  // Stacked factor scores have covariance W W' + blockdiag(psi).
  MatrixXd w(s.x.w.rows() + s.y.w.rows(), s.x.w.cols());
  w << s.x.w, s.y.w;
  MatrixXd lat_cov = w * w.transpose();
  lat_cov.topLeftCorner(s.x.psi.rows(), s.x.psi.cols()) += s.x.psi;
  lat_cov.bottomRightCorner(s.y.psi.rows(), s.y.psi.cols()) += s.y.psi;
  MatrixXd v = MatrixXd::Zero(px + py, w.rows());
  v.topLeftCorner(px, vx.cols()) = vx;
  v.bottomRightCorner(py, vy.cols()) = vy;
  MatrixXd cov = v * lat_cov * v.transpose();
  for (Eigen::Index i = 0; i < px; ++i) cov(i, i) += s.x.resid_var(i);
  for (Eigen::Index i = 0; i < py; ++i) cov(px + i, px + i) += s.y.resid_var(i);
  return cov;
}

VectorXd effect_sum(const ModelState& s, const ModelLayout& layout, Cell c) {
  VectorXd m = VectorXd::Zero(layout.k_z());
  for (int e = 0; e < layout.n_effects(); ++e) {
    const std::string name = layout.effect_name(e);
    // Effect names: alpha_a, beta_b, alphabeta_a_b.
    bool on = false;
    if (name.rfind("alphabeta_", 0) == 0) {
      const auto rest = name.substr(10);
      const auto us = rest.find('_');
      on = std::stoi(rest.substr(0, us)) == c.a && std::stoi(rest.substr(us + 1)) == c.b;
    } else if (name.rfind("alpha_", 0) == 0) {
      on = std::stoi(name.substr(6)) == c.a;
    } else if (name.rfind("beta_", 0) == 0) {
      on = std::stoi(name.substr(5)) == c.b;
    }
    if (on) m += s.effects.row(e).transpose();
  }
  return m;
}

VectorXd dense_population_mean(const ModelState& s, const ModelLayout& layout, Cell c) {
  const VectorXd m = effect_sum(s, layout, c);
  const VectorXd lx = s.x.w * m, ly = s.y.w * m;
  const MatrixXd vx = view_projection(s.x, s.x.w.rows());
  const MatrixXd vy = view_projection(s.y, s.y.w.rows());
  VectorXd out(vx.rows() + vy.rows());
  out << s.x.mu + vx * lx, s.y.mu + vy * ly;
  return out;
}

double effects_marginal_log_target(const ModelState& s, const ModelLayout& layout,
                                   const std::vector<Cell>& design, double effect_prior_var) {
  double lp = 0.0;
  for (Eigen::Index e = 0; e < s.effects.rows(); ++e)
    for (Eigen::Index d = 0; d < s.effects.cols(); ++d)
      lp += -0.5 * s.effects(e, d) * s.effects(e, d) / effect_prior_var;
  MatrixXd w(s.x.w.rows() + s.y.w.rows(), s.x.w.cols());
  w << s.x.w, s.y.w;
  MatrixXd cov = w * w.transpose();
  cov.topLeftCorner(s.x.psi.rows(), s.x.psi.cols()) += s.x.psi;
  cov.bottomRightCorner(s.y.psi.rows(), s.y.psi.cols()) += s.y.psi;
  for (size_t j = 0; j < design.size(); ++j) {
    const auto ji = static_cast<Eigen::Index>(j);
    VectorXd lat(w.rows());
    lat << s.x.lat.row(ji).transpose(), s.y.lat.row(ji).transpose();
    lp += mvn_log_density(lat, w * effect_sum(s, layout, design[j]), cov);
  }
  return lp;
}

Instance small_instance(std::uint64_t seed, bool free_location_scale) {
  Instance out;
  out.layout.k_clusters_x = 2;
  out.layout.k_clusters_y = 3;
  out.hypers = proper_hypers(free_location_scale);
  auto [state, data] = sample_from_model(out.layout, out.hypers, small_design(10), 5, 4, seed);
  out.state = std::move(state);
  out.data = std::move(data);
  out.data.validate();
  return out;
}

double conditional_gap(Block block, std::uint64_t seed) {
  Instance inst = small_instance(seed, block == Block::location_scale);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  return gap_for(inst, block, rng, {});
}

double frozen_conditional_gap(Block block, std::uint64_t seed) {
  Instance inst;
  inst.layout.k_shared = 2;
  inst.layout.k_clusters_x = 3;
  inst.layout.k_clusters_y = 2;
  inst.hypers = proper_hypers(false);
  auto [state, data] = sample_from_model(inst.layout, inst.hypers, small_design(12), 4, 5, seed);
  inst.state = std::move(state);
  inst.data = std::move(data);
  inst.data.validate();
  FrozenDims frozen(static_cast<size_t>(inst.layout.k_z()), false);
  frozen[0] = true;
  Rng rng(seed ^ 0x51afd7ed558ccd1ULL);
  return gap_for(inst, block, rng, frozen);
}

std::vector<std::string> geweke_statistic_names() {
  return {"alpha_shared",  "beta_yspec",     "alphabeta_xspec", "z_mean",        "z00_sq",
          "log_ard_x0",    "log_ard_y2",     "w_x00",           "w_x00_w_y00",   "log_psi_x00",
          "log_det_psi_y", "log_resid_x0",   "xlat_00",         "x_mean",        "y00_sq",
          "cluster_x0_size", "mu_x0",        "log_scale_y0"};
}

std::vector<double> geweke_statistics(const ModelState& s, const PairedDataset& data) {
  double size0 = 0.0;
  for (int c : s.x.clusters) size0 += c == 0 ? 1.0 : 0.0;
  return {s.effects(0, 0),
          s.effects(1, 2),
          s.effects(2, 1),
          s.z.mean(),
          s.z(0, 0) * s.z(0, 0),
          std::log(s.x.ard(0)),
          std::log(s.y.ard(2)),
          s.x.w(0, 0),
          s.x.w(0, 0) * s.y.w(0, 0),
          std::log(s.x.psi(0, 0)),
          std::log(s.y.psi.determinant()),
          std::log(s.x.resid_var(0)),
          s.x.lat(0, 0),
          data.x.mean(),
          data.y(0, 0) * data.y(0, 0),
          size0,
          s.x.mu(0),
          std::log(s.y.scales(0))};
}

GewekeResult geweke_test(int draws, std::uint64_t seed) {
  ModelLayout layout;
  layout.k_clusters_x = 2;
  layout.k_clusters_y = 2;
  const Hyperparameters hypers = proper_hypers(true);
  const auto design = small_design(6);
  const Eigen::Index p_x = 3, p_y = 3;

  GewekeResult out;
  out.names = geweke_statistic_names();
  const size_t m = out.names.size();
  std::vector<std::vector<double>> marginal(m), successive(m);

  Rng rng(seed);
  for (int t = 0; t < draws; ++t) {
    auto [s, data] = sample_from_model(layout, hypers, design, p_x, p_y, rng.next_seed());
    const auto stats = geweke_statistics(s, data);
    for (size_t i = 0; i < m; ++i) marginal[i].push_back(stats[i]);
  }

  SamplerConfig config;
  auto [state, data] = sample_from_model(layout, hypers, design, p_x, p_y, rng.next_seed());
  data.validate();
  for (int t = 0; t < draws; ++t) {
    gibbs_sweep(state, data, layout, hypers, config, rng, t + 1);
    data.x = sample_view_data(state, View::x, rng);
    data.y = sample_view_data(state, View::y, rng);
    const auto stats = geweke_statistics(state, data);
    for (size_t i = 0; i < m; ++i) successive[i].push_back(stats[i]);
  }

  for (size_t i = 0; i < m; ++i) {
    const auto& a = marginal[i];
    const auto& b = successive[i];
    double ma = 0.0, mb = 0.0;
    for (double v : a) ma += v;
    for (double v : b) mb += v;
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double va = 0.0;
    for (double v : a) va += (v - ma) * (v - ma);
    va /= static_cast<double>(a.size() - 1) * static_cast<double>(a.size());
    const double vb = mean_variance(b);
    out.z.push_back((ma - mb) / std::sqrt(va + vb));
  }
  return out;
}

}  // namespace mwmv::oracle
