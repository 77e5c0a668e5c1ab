#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "mwmv/conditionals.hpp"
#include "mwmv/model.hpp"

using namespace mwmv;

namespace {

double normal_log(double x, double mean, double var) {
  return -0.5 * (std::log(2.0 * M_PI * var) + (x - mean) * (x - mean) / var);
}

}  // namespace

TEST_CASE("data and z terms of the log joint match direct sums") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = oracle::small_instance(seed);
    const auto& s = inst.state;
    double data = 0.0;
    for (View v : kViews) {
      const auto& vs = s.view(v);
      const MatrixXd& m = inst.data.view(v);
      for (Eigen::Index j = 0; j < m.rows(); ++j)
        for (Eigen::Index i = 0; i < m.cols(); ++i)
          data += normal_log(m(j, i), vs.mu(i) + vs.scales(i) * vs.lat(j, vs.clusters[static_cast<size_t>(i)]),
                             vs.resid_var(i));
    }
    double z = 0.0;
    for (Eigen::Index j = 0; j < s.z.rows(); ++j) {
      const VectorXd m = oracle::effect_sum(s, inst.layout, inst.data.covariates[static_cast<size_t>(j)]);
      for (Eigen::Index d = 0; d < s.z.cols(); ++d) z += normal_log(s.z(j, d), m(d), 1.0);
    }
    const auto terms = log_joint_terms(s, inst.data, inst.layout, inst.hypers);
    CHECK(terms.data == doctest::Approx(data).epsilon(1e-12));
    CHECK(terms.z == doctest::Approx(z).epsilon(1e-12));
    CHECK(terms.total() == doctest::Approx(log_joint(s, inst.data, inst.layout, inst.hypers)));
  }
}

TEST_CASE("population marginal agrees with the dense generative covariance") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = oracle::small_instance(seed);
    for (Cell c : {Cell{0, 0}, Cell{1, 0}, Cell{0, 1}, Cell{1, 1}}) {
      const auto pm = population_marginal(inst.state, inst.layout, c);
      const MatrixXd cov = oracle::dense_population_cov(inst.state);
      const VectorXd mean = oracle::dense_population_mean(inst.state, inst.layout, c);
      CHECK((pm.cov - cov).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((pm.mean - mean).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("low-rank marginal scorer matches dense normal densities") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = oracle::small_instance(seed);
    const MarginalScorer scorer(inst.state, inst.layout);
    const MatrixXd cov = oracle::dense_population_cov(inst.state);
    const Eigen::Index px = inst.data.x.cols(), py = inst.data.y.cols();
    for (Eigen::Index j = 0; j < inst.data.n(); ++j) {
      const Cell c = inst.data.covariates[static_cast<size_t>(j)];
      const VectorXd mean = oracle::dense_population_mean(inst.state, inst.layout, c);
      VectorXd row(px + py);
      row << inst.data.x.row(j).transpose(), inst.data.y.row(j).transpose();
      const auto d = scorer.score(inst.data.x.row(j).transpose(), inst.data.y.row(j).transpose(), c);
      CHECK(d.joint == doctest::Approx(oracle::mvn_log_density(row, mean, cov)).epsilon(1e-10));
      CHECK(d.x == doctest::Approx(oracle::mvn_log_density(row.head(px), mean.head(px),
                                                          cov.topLeftCorner(px, px)))
                       .epsilon(1e-10));
      CHECK(d.y == doctest::Approx(oracle::mvn_log_density(row.tail(py), mean.tail(py),
                                                          cov.bottomRightCorner(py, py)))
                       .epsilon(1e-10));
    }
  }
}

TEST_CASE("ancestral draws reproduce the population moments") {
  const auto inst = oracle::small_instance(3);
  const Cell c{1, 1};
  const std::vector<Cell> design(20000, c);
  FixedComponents fixed;
  const auto& s = inst.state;
  fixed.effects = s.effects;
  fixed.w_x = s.x.w;
  fixed.w_y = s.y.w;
  fixed.psi_x = s.x.psi;
  fixed.psi_y = s.y.psi;
  fixed.clusters_x = s.x.clusters;
  fixed.clusters_y = s.y.clusters;
  fixed.resid_var_x = s.x.resid_var;
  fixed.resid_var_y = s.y.resid_var;
  fixed.ard_x = s.x.ard;
  fixed.ard_y = s.y.ard;
  fixed.scales_x = s.x.scales;
  fixed.scales_y = s.y.scales;
  fixed.mu_x = s.x.mu;
  fixed.mu_y = s.y.mu;
  const auto draw = sample_from_model(inst.layout, inst.hypers, design, inst.data.x.cols(),
                                     inst.data.y.cols(), 77, fixed);
  const PairedDataset& data = draw.second;
  MatrixXd rows(data.n(), data.x.cols() + data.y.cols());
  rows << data.x, data.y;
  const double n = static_cast<double>(rows.rows());
  const VectorXd mean = rows.colwise().mean().transpose();
  const MatrixXd centered = rows.rowwise() - mean.transpose();
  const MatrixXd emp = centered.transpose() * centered / (n - 1.0);
  const MatrixXd cov = oracle::dense_population_cov(s);
  const VectorXd truth = oracle::dense_population_mean(s, inst.layout, c);
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    CHECK(std::abs(mean(i) - truth(i)) < 5.0 * std::sqrt(cov(i, i) / n));
    for (Eigen::Index k = 0; k < cov.cols(); ++k)
      CHECK(std::abs(emp(i, k) - cov(i, k)) <
            5.0 * std::sqrt((cov(i, i) * cov(k, k) + cov(i, k) * cov(i, k)) / n));
  }
}

TEST_CASE("effects conditional with z integrated out matches its target") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto inst = oracle::small_instance(seed);
    Rng rng(seed + 1000);
    const auto q = effects_marginal_conditional(inst.state, inst.layout, inst.data.covariates, inst.hypers);
    const MatrixXd draw = q.sample(rng);
    ModelState t = inst.state;
    const auto kz = static_cast<Eigen::Index>(inst.layout.k_z());
    for (Eigen::Index e = 0; e < t.effects.rows(); ++e)
      for (Eigen::Index d = 0; d < kz; ++d) t.effects(e, d) = draw(0, d + kz * e);
    MatrixXd before(1, draw.cols());
    for (Eigen::Index e = 0; e < t.effects.rows(); ++e)
      for (Eigen::Index d = 0; d < kz; ++d) before(0, d + kz * e) = inst.state.effects(e, d);
    const double dq = q.log_density(draw) - q.log_density(before);
    const double v = inst.hypers.effect_prior_var;
    const double dp = oracle::effects_marginal_log_target(t, inst.layout, inst.data.covariates, v) -
                      oracle::effects_marginal_log_target(inst.state, inst.layout, inst.data.covariates, v);
    CHECK(std::abs(dq - dp) < 1e-8);
  }
}
