#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mwmv {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class View { x, y };

inline constexpr View kViews[] = {View::x, View::y};

inline const char* view_name(View v) { return v == View::x ? "x" : "y"; }

/// Covariate labels of one sample. (0, 0) is the control population.
struct Cell {
  int a = 0;
  int b = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Two paired sample-by-variable matrices with per-sample covariates.
struct PairedDataset {
  MatrixXd x;
  MatrixXd y;
  std::vector<Cell> covariates;
  std::vector<std::string> variable_names_x;
  std::vector<std::string> variable_names_y;
  std::vector<std::string> sample_ids;

  Eigen::Index n() const { return x.rows(); }
  const MatrixXd& view(View v) const { return v == View::x ? x : y; }
  MatrixXd& view(View v) { return v == View::x ? x : y; }
  const std::vector<std::string>& names(View v) const {
    return v == View::x ? variable_names_x : variable_names_y;
  }

  /// Checks shapes, labels and that the control cell is populated. Fills in
  /// default variable names and sample ids when they are empty.
  void validate();
  int max_a() const;
  int max_b() const;
  /// Number of samples in each (a, b) cell, indexed [a][b].
  std::vector<std::vector<int>> cell_counts() const;
  /// Rows restricted to the given sample indices, in that order.
  PairedDataset subset(const std::vector<int>& rows) const;
};

/// Which latent dimension family a column of z belongs to.
enum class DimKind { shared, x_specific, y_specific };

/// Partition of the latent space plus per-view cluster counts. Latent
/// dimensions are ordered [shared..., x-specific..., y-specific...].
struct ModelLayout {
  int k_shared = 1;
  int k_xspec = 1;
  int k_yspec = 1;
  int k_clusters_x = 3;
  int k_clusters_y = 3;
  // Highest covariate level A and B; effects exist for levels 1..max.
  int max_a = 1;
  int max_b = 1;

  int k_z() const { return k_shared + k_xspec + k_yspec; }
  int k_clusters(View v) const { return v == View::x ? k_clusters_x : k_clusters_y; }
  DimKind kind(int dim) const;
  /// False for structurally zero W columns (the other view's specific dims).
  bool active(View v, int dim) const;
  std::string dimension_name(int dim) const;

  int n_effects() const { return max_a + max_b + max_a * max_b; }
  std::string effect_name(int e) const;
  /// Row index of a named effect, or -1 if the layout has no such effect.
  int effect_index(const std::string& name) const;
  /// Effect rows active for a sample of the given cell (baselines excluded).
  std::vector<int> effects_for(Cell c) const;

  void validate() const;
  void validate_against(const PairedDataset& data) const;

  friend bool operator==(const ModelLayout&, const ModelLayout&) = default;
};

/// Prior settings. Empty iw_scale / unset iw_dof fall back to identity and
/// cluster count + 2.
struct Hyperparameters {
  double ard_shape = 1e-3;
  double ard_scale = 1e-3;
  MatrixXd iw_scale_x;
  MatrixXd iw_scale_y;
  std::optional<double> iw_dof_x;
  std::optional<double> iw_dof_y;
  double resid_dof = 1e-3;
  double resid_scale = 1.0;
  double dirichlet_conc = 1.0;
  double effect_prior_var = 1.0;

  // Location mu_i and scale lambda_i are fixed at 0 and 1 unless enabled.
  bool free_location_scale = false;
  double location_prior_var = 100.0;
  double scale_prior_mean = 1.0;
  double scale_prior_var = 1.0;

  MatrixXd iw_scale(View v, int k) const;
  double iw_dof(View v, int k) const;
  void validate(const ModelLayout& layout) const;
};

/// Per-view block of a ModelState.
struct ViewState {
  std::vector<int> clusters;  // 0-based cluster index per variable
  VectorXd scales;            // lambda_i
  VectorXd resid_var;         // sigma_i^2
  VectorXd mu;
  MatrixXd w;    // k_clusters x k_z
  VectorXd ard;  // variance per W column
  MatrixXd psi;  // k_clusters x k_clusters
  MatrixXd lat;  // n x k_clusters
};

/// One joint configuration of all parameters and latent variables.
struct ModelState {
  ViewState x;
  ViewState y;
  MatrixXd effects;  // n_effects x k_z, rows named by ModelLayout::effect_name
  MatrixXd z;        // n x k_z

  const ViewState& view(View v) const { return v == View::x ? x : y; }
  ViewState& view(View v) { return v == View::x ? x : y; }

  /// Prior mean of z for a population: alpha_a + beta_b + (alpha beta)_ab.
  VectorXd population_mean(const ModelLayout& layout, Cell c) const;
  /// Row j holds the prior mean of z_j.
  MatrixXd prior_means(const ModelLayout& layout, const std::vector<Cell>& design) const;

  /// Throws if shapes disagree with the layout / sample count or masks leak.
  void check_consistent(const ModelLayout& layout, Eigen::Index n, Eigen::Index p_x,
                        Eigen::Index p_y) const;
};

/// Exact (bitwise for doubles) equality of two states, shapes included.
bool identical(const ModelState& a, const ModelState& b);

}  // namespace mwmv
