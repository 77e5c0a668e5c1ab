#pragma once

#include <filesystem>
#include <vector>

#include "mwmv/sampler.hpp"

namespace mwmv {

/// How the cluster-count grid is searched.
enum class GridMode {
  /// Every (k_x, k_y) pair, chosen by the joint held-out density.
  product,
  /// Pairs (k, k) only; k_x and k_y are chosen separately from the per-view
  /// held-out densities, which depend only on their own view's parameters.
  per_view,
};

struct SelectionGrid {
  std::vector<int> cluster_counts_x{2, 3, 4, 5};
  std::vector<int> cluster_counts_y{2, 3, 4, 5};
  int folds = 10;
  GridMode mode = GridMode::product;
  SamplerConfig config;
  /// A configuration whose summed held-out log density is within this many
  /// standard errors of the best (paired over folds) counts as tied, and
  /// ties go to the fewest clusters. 0 gives the plain argmax.
  double tie_se = 1.0;
  /// Worker threads for the independent fits; 1 runs sequentially.
  int threads = 1;

  void validate(Eigen::Index n) const;
};

/// Fold index per sample. Within each (a, b) cell the samples are shuffled
/// with `seed` and dealt round-robin, so every training set keeps every cell.
/// Throws DesignError naming a cell with fewer than two samples.
std::vector<int> stratified_folds(const std::vector<Cell>& design, int folds, std::uint64_t seed);

struct FoldScore {
  int k_clusters_x = 0;
  int k_clusters_y = 0;
  int fold = 0;
  int n_heldout = 0;
  /// Mean over held-out samples of the log predictive density.
  double heldout_loglik = 0.0;
  double loglik_x = 0.0;
  double loglik_y = 0.0;
};

struct SelectionResult {
  std::vector<FoldScore> table;
  int k_clusters_x = 0;
  int k_clusters_y = 0;
  /// Mean held-out log density per sample of the chosen configuration.
  double score = 0.0;
};

/// Log predictive density of held-out samples averaged over posterior states
/// (log of the mean density). Returns joint, x and y terms per sample.
std::vector<MarginalLogDensity> predictive_log_density(const PosteriorChain& chain,
                                                       const PairedDataset& heldout);

SelectionResult cv_select(const PairedDataset& data, const SelectionGrid& grid,
                          const Hyperparameters& hypers, const ModelLayout& layout_template);

/// Columns k_clusters_x, k_clusters_y, fold, heldout_loglik, then the
/// per-view terms loglik_x, loglik_y and n_heldout.
void write_score_csv(const std::filesystem::path& path, const std::vector<FoldScore>& table);

}  // namespace mwmv
