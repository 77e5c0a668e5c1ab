#include "mwmv/types.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "mwmv/errors.hpp"

namespace mwmv {

namespace {

bool same_matrix(const MatrixXd& a, const MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

bool same_view(const ViewState& a, const ViewState& b) {
  return a.clusters == b.clusters && same_matrix(a.scales, b.scales) &&
         same_matrix(a.resid_var, b.resid_var) && same_matrix(a.mu, b.mu) &&
         same_matrix(a.w, b.w) && same_matrix(a.ard, b.ard) && same_matrix(a.psi, b.psi) &&
         same_matrix(a.lat, b.lat);
}

}  // namespace

void PairedDataset::validate() {
  if (x.rows() != y.rows())
    throw InputError("views have different sample counts: " + std::to_string(x.rows()) +
                     " vs " + std::to_string(y.rows()));
  if (static_cast<Eigen::Index>(covariates.size()) != x.rows())
    throw InputError("covariate count does not match sample count");
  if (x.rows() == 0) throw InputError("dataset has no samples");
  if (x.cols() == 0 || y.cols() == 0) throw InputError("a view has no variables");
  if (!x.allFinite() || !y.allFinite()) throw InputError("non-finite values in data");
  for (const auto& c : covariates)
    if (c.a < 0 || c.b < 0) throw InputError("negative covariate level");

  auto fill_names = [](std::vector<std::string>& names, Eigen::Index p, const char* prefix) {
    if (names.empty())
      for (Eigen::Index i = 0; i < p; ++i) names.push_back(prefix + std::to_string(i + 1));
    if (static_cast<Eigen::Index>(names.size()) != p)
      throw InputError("variable name count does not match column count");
  };
  fill_names(variable_names_x, x.cols(), "x");
  fill_names(variable_names_y, y.cols(), "y");
  if (sample_ids.empty())
    for (Eigen::Index j = 0; j < x.rows(); ++j) sample_ids.push_back("s" + std::to_string(j + 1));
  if (static_cast<Eigen::Index>(sample_ids.size()) != x.rows())
    throw InputError("sample id count does not match sample count");

  if (std::none_of(covariates.begin(), covariates.end(), [](Cell c) { return c == Cell{}; }))
    throw DesignError("covariate cell empty: control population (a=0, b=0) has no samples");
}

int PairedDataset::max_a() const {
  int m = 0;
  for (const auto& c : covariates) m = std::max(m, c.a);
  return m;
}

int PairedDataset::max_b() const {
  int m = 0;
  for (const auto& c : covariates) m = std::max(m, c.b);
  return m;
}

std::vector<std::vector<int>> PairedDataset::cell_counts() const {
  std::vector<std::vector<int>> counts(static_cast<size_t>(max_a() + 1),
                                       std::vector<int>(static_cast<size_t>(max_b() + 1), 0));
  for (const auto& c : covariates) ++counts[static_cast<size_t>(c.a)][static_cast<size_t>(c.b)];
  return counts;
}

PairedDataset PairedDataset::subset(const std::vector<int>& rows) const {
  PairedDataset out;
  out.x = x(rows, Eigen::all);
  out.y = y(rows, Eigen::all);
  for (int r : rows) {
    out.covariates.push_back(covariates[static_cast<size_t>(r)]);
    if (!sample_ids.empty()) out.sample_ids.push_back(sample_ids[static_cast<size_t>(r)]);
  }
  out.variable_names_x = variable_names_x;
  out.variable_names_y = variable_names_y;
  return out;
}

DimKind ModelLayout::kind(int dim) const {
  if (dim < k_shared) return DimKind::shared;
  if (dim < k_shared + k_xspec) return DimKind::x_specific;
  return DimKind::y_specific;
}

bool ModelLayout::active(View v, int dim) const {
  const DimKind k = kind(dim);
  if (k == DimKind::shared) return true;
  return v == View::x ? k == DimKind::x_specific : k == DimKind::y_specific;
}

std::string ModelLayout::dimension_name(int dim) const {
  switch (kind(dim)) {
    case DimKind::shared:
      return "shared_" + std::to_string(dim + 1);
    case DimKind::x_specific:
      return "x_specific_" + std::to_string(dim - k_shared + 1);
    case DimKind::y_specific:
      break;
  }
  return "y_specific_" + std::to_string(dim - k_shared - k_xspec + 1);
}

std::string ModelLayout::effect_name(int e) const {
  if (e < max_a) return "alpha_" + std::to_string(e + 1);
  if (e < max_a + max_b) return "beta_" + std::to_string(e - max_a + 1);
  const int r = e - max_a - max_b;
  return "alphabeta_" + std::to_string(r / max_b + 1) + "_" + std::to_string(r % max_b + 1);
}

int ModelLayout::effect_index(const std::string& name) const {
  for (int e = 0; e < n_effects(); ++e)
    if (effect_name(e) == name) return e;
  return -1;
}

std::vector<int> ModelLayout::effects_for(Cell c) const {
  std::vector<int> rows;
  if (c.a > 0) rows.push_back(c.a - 1);
  if (c.b > 0) rows.push_back(max_a + c.b - 1);
  if (c.a > 0 && c.b > 0) rows.push_back(max_a + max_b + (c.a - 1) * max_b + (c.b - 1));
  return rows;
}

void ModelLayout::validate() const {
  if (k_shared < 0 || k_xspec < 0 || k_yspec < 0)
    throw DesignError("latent dimension counts must be non-negative");
  if (k_z() < 1) throw DesignError("layout needs at least one latent dimension");
  if (k_clusters_x < 1 || k_clusters_y < 1) throw DesignError("cluster counts must be >= 1");
  if (max_a < 0 || max_b < 0) throw DesignError("covariate levels must be non-negative");
}

void ModelLayout::validate_against(const PairedDataset& data) const {
  validate();
  if (k_clusters_x > data.x.cols())
    throw DesignError("k_clusters_x exceeds the number of x variables");
  if (k_clusters_y > data.y.cols())
    throw DesignError("k_clusters_y exceeds the number of y variables");
  for (const auto& c : data.covariates)
    if (c.a > max_a || c.b > max_b)
      throw DesignError("covariate level (" + std::to_string(c.a) + ", " + std::to_string(c.b) +
                        ") outside layout levels");
}

MatrixXd Hyperparameters::iw_scale(View v, int k) const {
  const MatrixXd& s = v == View::x ? iw_scale_x : iw_scale_y;
  if (s.size() == 0) return MatrixXd::Identity(k, k);
  if (s.rows() != k || s.cols() != k)
    throw InputError(std::string("iw_scale_") + view_name(v) + " does not match cluster count");
  return s;
}

double Hyperparameters::iw_dof(View v, int k) const {
  const auto& d = v == View::x ? iw_dof_x : iw_dof_y;
  return d.value_or(static_cast<double>(k) + 2.0);
}

void Hyperparameters::validate(const ModelLayout& layout) const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw InputError(std::string(name) + " must be strictly positive");
  };
  positive(ard_shape, "ard_shape");
  positive(ard_scale, "ard_scale");
  positive(resid_dof, "resid_dof");
  positive(resid_scale, "resid_scale");
  positive(dirichlet_conc, "dirichlet_conc");
  positive(effect_prior_var, "effect_prior_var");
  positive(location_prior_var, "location_prior_var");
  positive(scale_prior_var, "scale_prior_var");
  for (View v : kViews) {
    const int k = layout.k_clusters(v);
    if (!(iw_dof(v, k) > k - 1))
      throw InputError(std::string("iw_dof_") + view_name(v) + " must exceed cluster count - 1");
    const MatrixXd s = iw_scale(v, k);
    Eigen::LLT<MatrixXd> llt(s);
    if (llt.info() != Eigen::Success || !s.isApprox(s.transpose()))
      throw InputError(std::string("iw_scale_") + view_name(v) + " must be SPD");
  }
}

VectorXd ModelState::population_mean(const ModelLayout& layout, Cell c) const {
  VectorXd m = VectorXd::Zero(layout.k_z());
  for (int e : layout.effects_for(c)) m += effects.row(e).transpose();
  return m;
}

MatrixXd ModelState::prior_means(const ModelLayout& layout, const std::vector<Cell>& design) const {
  MatrixXd m(static_cast<Eigen::Index>(design.size()), layout.k_z());
  for (size_t j = 0; j < design.size(); ++j)
    m.row(static_cast<Eigen::Index>(j)) = population_mean(layout, design[j]).transpose();
  return m;
}

void ModelState::check_consistent(const ModelLayout& layout, Eigen::Index n, Eigen::Index p_x,
                                  Eigen::Index p_y) const {
  const int kz = layout.k_z();
  if (effects.rows() != layout.n_effects() || effects.cols() != kz)
    throw InputError("effects matrix does not match layout");
  if (z.rows() != n || z.cols() != kz) throw InputError("z does not match layout");
  for (View v : kViews) {
    const ViewState& vs = view(v);
    const int k = layout.k_clusters(v);
    const Eigen::Index p = v == View::x ? p_x : p_y;
    const std::string tag = std::string(" (view ") + view_name(v) + ")";
    if (static_cast<Eigen::Index>(vs.clusters.size()) != p || vs.scales.size() != p ||
        vs.resid_var.size() != p || vs.mu.size() != p)
      throw InputError("per-variable vectors do not match variable count" + tag);
    for (int c : vs.clusters)
      if (c < 0 || c >= k) throw InputError("cluster index out of range" + tag);
    if (vs.w.rows() != k || vs.w.cols() != kz) throw InputError("W does not match layout" + tag);
    if (vs.ard.size() != kz) throw InputError("ARD vector does not match layout" + tag);
    if (vs.psi.rows() != k || vs.psi.cols() != k) throw InputError("psi does not match layout" + tag);
    if (vs.lat.rows() != n || vs.lat.cols() != k)
      throw InputError("factor scores do not match layout" + tag);
    for (int d = 0; d < kz; ++d)
      if (!layout.active(v, d) && !vs.w.col(d).isZero(0.0))
        throw InputError("structurally zero W column is non-zero" + tag);
  }
}

bool identical(const ModelState& a, const ModelState& b) {
  return same_view(a.x, b.x) && same_view(a.y, b.y) && same_matrix(a.effects, b.effects) &&
         same_matrix(a.z, b.z);
}

}  // namespace mwmv
