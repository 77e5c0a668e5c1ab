#pragma once

#include <vector>

#include "mwmv/linalg.hpp"
#include "mwmv/types.hpp"

namespace mwmv {

// Full conditional distributions of each Gibbs block. Each one is built from
// the current state with the block's own value ignored, can be sampled, and
// can evaluate the log density of any candidate value of the block; the
// sampler and the derivation tests share these objects.

/// Independent inverse-gamma coordinates.
struct InverseGammaVector {
  VectorXd shape;
  VectorXd scale;

  VectorXd sample(Rng& rng) const;
  double log_density(const VectorXd& value) const;
};

struct InverseWishart {
  MatrixXd scale;
  double dof = 0.0;

  MatrixXd sample(Rng& rng) const;
  double log_density(const MatrixXd& value) const;
};

/// Conditional of W for one view over its free (unmasked, unfrozen) entries.
/// Entry index is column-major: r + k_clusters * l.
struct WConditional {
  SharedPrecisionGaussian gaussian;
  std::vector<int> free;
  int k_clusters = 0;

  MatrixXd sample(const MatrixXd& current, Rng& rng) const;
  double log_density(const MatrixXd& w) const;
};

/// Conditional of per-variable (mu_i, lambda_i) pairs, lambda_i truncated to
/// positive values.
struct LocationScaleConditional {
  std::vector<Eigen::Matrix2d> precision;
  std::vector<Eigen::Vector2d> mean;

  /// Returns (mu, scales).
  std::pair<VectorXd, VectorXd> sample(Rng& rng) const;
  double log_density(const VectorXd& mu, const VectorXd& scales) const;
};

/// Which latent dimensions are held fixed (deflation). Empty means none.
using FrozenDims = std::vector<bool>;

/// z rows given effects, W, psi and factor scores of both views.
SharedPrecisionGaussian z_conditional(const ModelState& s, const ModelLayout& layout,
                                      const std::vector<Cell>& design,
                                      const FrozenDims& frozen = {});
std::vector<int> free_dims(const ModelLayout& layout, const FrozenDims& frozen);

/// Effects given z. Rows of the value are free latent dimensions, columns are
/// effects (i.e. the transpose of ModelState::effects restricted to free dims).
SharedPrecisionGaussian effects_conditional(const ModelState& s, const ModelLayout& layout,
                                            const std::vector<Cell>& design,
                                            const Hyperparameters& hypers,
                                            const FrozenDims& frozen = {});

/// Effects given factor scores, W and psi with the free z coordinates
/// integrated out. One row holding the free-dims x effects block of
/// ModelState::effects transposed, vectorized column-major.
SharedPrecisionGaussian effects_marginal_conditional(const ModelState& s, const ModelLayout& layout,
                                                     const std::vector<Cell>& design,
                                                     const Hyperparameters& hypers,
                                                     const FrozenDims& frozen = {});

/// Factor scores of one view given data, clusters, W, z and psi.
SharedPrecisionGaussian latents_conditional(const ModelState& s, const PairedDataset& data,
                                            View v);

WConditional w_conditional(const ModelState& s, const ModelLayout& layout, View v,
                           const FrozenDims& frozen = {});

/// ARD variances of one view. Entries of structurally zero columns are not
/// parameters (fixed at 1); they carry the prior here and are never updated.
InverseGammaVector ard_conditional(const ModelState& s, const ModelLayout& layout,
                                   const Hyperparameters& hypers, View v);

InverseWishart psi_conditional(const ModelState& s, const ModelLayout& layout,
                               const Hyperparameters& hypers, View v);

/// Normalized log probabilities over clusters for one variable, from the
/// other variables' cluster counts, cross products (x_i - mu_i)' lat_k and
/// factor score energies |lat_k|^2.
VectorXd cluster_log_weights(const VectorXd& counts_without_i, const VectorXd& cross,
                             const VectorXd& energy, double scale, double resid_var,
                             double conc);

/// Normalized log probabilities of v_i over cluster indices given all other
/// assignments, with the Dirichlet weights integrated out.
VectorXd cluster_log_probs(const ModelState& s, const PairedDataset& data,
                           const Hyperparameters& hypers, View v, Eigen::Index i);

InverseGammaVector resid_var_conditional(const ModelState& s, const PairedDataset& data,
                                         const Hyperparameters& hypers, View v);

LocationScaleConditional location_scale_conditional(const ModelState& s,
                                                    const PairedDataset& data,
                                                    const Hyperparameters& hypers, View v);

}  // namespace mwmv
