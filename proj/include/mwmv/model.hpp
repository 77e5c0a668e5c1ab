#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mwmv/rng.hpp"
#include "mwmv/types.hpp"

namespace mwmv {

/// Components held at given values by sample_from_model; everything left
/// unset is drawn from its prior.
struct FixedComponents {
  std::optional<MatrixXd> effects;
  std::optional<MatrixXd> w_x, w_y;
  std::optional<MatrixXd> psi_x, psi_y;
  std::optional<std::vector<int>> clusters_x, clusters_y;
  std::optional<VectorXd> resid_var_x, resid_var_y;
  std::optional<VectorXd> ard_x, ard_y;
  std::optional<VectorXd> scales_x, scales_y;
  std::optional<VectorXd> mu_x, mu_y;
};

/// Empty (all-NaN-free) state with every block sized for the layout.
ModelState zero_state(const ModelLayout& layout, Eigen::Index n, Eigen::Index p_x,
                      Eigen::Index p_y);

/// Ancestral draw of parameters, effects, z and factor scores, in that order.
/// Data are not drawn.
ModelState sample_prior_state(const ModelLayout& layout, const Hyperparameters& hypers,
                              const std::vector<Cell>& design, Eigen::Index p_x,
                              Eigen::Index p_y, Rng& rng, const FixedComponents& fixed = {});

/// Data rows for one view given the state: x_ij ~ N(mu_i + lambda_i lat_{j,v_i}, sigma_i^2).
MatrixXd sample_view_data(const ModelState& state, View v, Rng& rng);

/// Full ancestral draw of the hierarchical model: effects, z, factor scores
/// and then both data views, one row per entry of `design`.
std::pair<ModelState, PairedDataset> sample_from_model(const ModelLayout& layout,
                                                       const Hyperparameters& hypers,
                                                       const std::vector<Cell>& design,
                                                       Eigen::Index p_x, Eigen::Index p_y,
                                                       std::uint64_t seed,
                                                       const FixedComponents& fixed = {});

/// Named pieces of the log joint density. `total()` is the log joint.
struct LogJointTerms {
  double effects = 0.0;
  double z = 0.0;
  double ard = 0.0;
  double w = 0.0;
  double psi = 0.0;
  double latents = 0.0;
  double clusters = 0.0;
  double resid_var = 0.0;
  double location_scale = 0.0;
  double data = 0.0;
  double total() const {
    return effects + z + ard + w + psi + latents + clusters + resid_var + location_scale + data;
  }
};

LogJointTerms log_joint_terms(const ModelState& state, const PairedDataset& data,
                              const ModelLayout& layout, const Hyperparameters& hypers);

/// Sum of all log prior and log likelihood terms. Throws NumericalError on a
/// non-SPD psi or non-positive variances.
double log_joint(const ModelState& state, const PairedDataset& data, const ModelLayout& layout,
                 const Hyperparameters& hypers);

/// The terms of log_joint that involve sample j only (z_j, both factor score
/// vectors and both data rows).
double sample_log_terms(const ModelState& state, const PairedDataset& data,
                        const ModelLayout& layout, Eigen::Index j);

/// Gradient of log_joint with respect to W of one view; masked entries are zero.
MatrixXd log_joint_grad_w(const ModelState& state, const ModelLayout& layout, View v);

/// Cluster projection V (p x k_clusters) with lambda_i at (i, v_i).
MatrixXd projection_matrix(const ViewState& vs, int k_clusters);

/// Exact Gaussian marginal of a stacked sample [x; y] for one population with
/// z and factor scores integrated out.
struct PopulationMarginal {
  VectorXd mean;  // p_x + p_y
  MatrixXd cov;   // (p_x + p_y) square
  Eigen::Index p_x = 0;

  VectorXd mean_x() const { return mean.head(p_x); }
  VectorXd mean_y() const { return mean.tail(mean.size() - p_x); }
  MatrixXd cov_x() const { return cov.topLeftCorner(p_x, p_x); }
  MatrixXd cov_y() const {
    const auto p_y = mean.size() - p_x;
    return cov.bottomRightCorner(p_y, p_y);
  }
  MatrixXd cross_cov() const { return cov.topRightCorner(p_x, mean.size() - p_x); }
};

PopulationMarginal population_marginal(const ModelState& state, const ModelLayout& layout,
                                       Cell population);

/// Log density of one paired sample under population_marginal, computed in
/// O(p + k^3) through the low-rank-plus-diagonal structure. `joint` uses both
/// views; `x` and `y` are the per-view marginals.
struct MarginalLogDensity {
  double joint = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Precomputes the per-state factorizations so many samples can be scored.
class MarginalScorer {
 public:
  MarginalScorer(const ModelState& state, const ModelLayout& layout);
  MarginalLogDensity score(const VectorXd& x_row, const VectorXd& y_row, Cell population) const;

 private:
  struct Part {
    Eigen::LLT<MatrixXd> inner;  // C^-1 + G' Lambda^-1 G
    double log_det = 0.0;        // log det of the marginal covariance
    Eigen::Index dim = 0;
  };
  ModelState state_;
  ModelLayout layout_;
  Part joint_, x_, y_;
};

}  // namespace mwmv
