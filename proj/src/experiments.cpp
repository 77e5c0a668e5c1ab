#include "mwmv/experiments.hpp"

#include <cmath>
#include <fstream>

#include "mwmv/csv.hpp"
#include "mwmv/errors.hpp"
#include "mwmv/model.hpp"
#include "mwmv/preprocess.hpp"

namespace mwmv {

namespace {

std::vector<int> equal_blocks(Eigen::Index p, int k) {
  std::vector<int> out(static_cast<size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) out[static_cast<size_t>(i)] = static_cast<int>(i * k / p);
  return out;
}

Json matrix_rows(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd rows_matrix(const Json& j) {
  if (j.empty()) return {};
  MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j.at(0).size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = j.at(static_cast<size_t>(r)).at(static_cast<size_t>(c)).get<double>();
  return m;
}

}  // namespace

SyntheticSpec SyntheticSpec::recovery_default() {
  SyntheticSpec spec;
  const int kz = spec.layout.k_z();
  auto unit = [&](int d) {
    VectorXd v = VectorXd::Zero(kz);
    v(d) = 2.0;
    return v;
  };
  spec.planted["alpha_1"] = unit(0);
  spec.planted["alphabeta_1_1"] = unit(1);
  spec.planted["beta_1"] = unit(2);
  return spec;
}

void SyntheticSpec::validate() {
  layout.validate();
  if (p_x < layout.k_clusters_x || p_y < layout.k_clusters_y)
    throw DesignError("more clusters than variables");
  if (!(noise_sd >= 0.0)) throw InputError("noise_sd must be non-negative");
  for (int n : n_grid)
    if (n < 1) throw InputError("sample counts must be positive");
  for (const auto& [name, vec] : planted) {
    if (layout.effect_index(name) < 0) throw InputError("unknown planted effect: " + name);
    if (vec.size() != layout.k_z()) throw InputError("planted effect " + name + " has wrong length");
  }
  if (clusters_x.empty()) clusters_x = equal_blocks(p_x, layout.k_clusters_x);
  if (clusters_y.empty()) clusters_y = equal_blocks(p_y, layout.k_clusters_y);
  if (static_cast<Eigen::Index>(clusters_x.size()) != p_x ||
      static_cast<Eigen::Index>(clusters_y.size()) != p_y)
    throw InputError("true partition length differs from variable count");
  Rng rng(seed);
  for (View v : kViews) {
    MatrixXd& w = v == View::x ? w_x : w_y;
    const int k = layout.k_clusters(v);
    if (w.size() == 0) {
      // Random directions with every column at the expected N(0, 1) norm
      // sqrt(k), so equal planted effects are equally visible in the data.
      w = MatrixXd::Zero(k, layout.k_z());
      for (int d = 0; d < layout.k_z(); ++d) {
        for (int r = 0; r < k; ++r) w(r, d) = rng.normal();
        w.col(d) *= std::sqrt(static_cast<double>(k)) / w.col(d).norm();
      }
    }
    if (w.rows() != k || w.cols() != layout.k_z()) throw InputError("projection matrix has wrong shape");
    for (int d = 0; d < layout.k_z(); ++d)
      if (!layout.active(v, d)) w.col(d).setZero();
  }
}

Json to_json(const SyntheticSpec& spec) {
  Json planted = Json::object();
  for (const auto& [name, vec] : spec.planted) {
    Json v = Json::array();
    for (Eigen::Index i = 0; i < vec.size(); ++i) v.push_back(vec(i));
    planted[name] = std::move(v);
  }
  Json j{{"n_grid", spec.n_grid},
         {"p_x", spec.p_x},
         {"p_y", spec.p_y},
         {"layout", to_json(spec.layout)},
         {"planted", planted},
         {"noise_sd", spec.noise_sd},
         {"preprocess", spec.preprocess},
         {"seed", spec.seed},
         {"data_seed", spec.data_seed}};
  Json cx = Json::array(), cy = Json::array();
  for (int c : spec.clusters_x) cx.push_back(c + 1);
  for (int c : spec.clusters_y) cy.push_back(c + 1);
  j["clusters_x"] = cx;
  j["clusters_y"] = cy;
  j["w_x"] = matrix_rows(spec.w_x);
  j["w_y"] = matrix_rows(spec.w_y);
  return j;
}

SyntheticSpec synthetic_spec_from_json(const Json& j) {
  SyntheticSpec spec = j.value("recovery_default", true) ? SyntheticSpec::recovery_default() : SyntheticSpec{};
  try {
    if (j.contains("n_grid")) spec.n_grid = j["n_grid"].get<std::vector<int>>();
    spec.p_x = j.value("p_x", spec.p_x);
    spec.p_y = j.value("p_y", spec.p_y);
    if (j.contains("layout")) spec.layout = layout_from_json(j["layout"]);
    if (j.contains("planted")) {
      spec.planted.clear();
      for (const auto& [name, v] : j["planted"].items()) {
        const auto vals = v.get<std::vector<double>>();
        spec.planted[name] = Eigen::Map<const VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
      }
    }
    spec.noise_sd = j.value("noise_sd", spec.noise_sd);
    spec.preprocess = j.value("preprocess", spec.preprocess);
    spec.seed = j.value("seed", spec.seed);
    spec.data_seed = j.value("data_seed", spec.data_seed);
    for (View v : kViews) {
      const std::string sfx = view_name(v);
      auto& cl = v == View::x ? spec.clusters_x : spec.clusters_y;
      if (j.contains("clusters_" + sfx)) {
        cl = j["clusters_" + sfx].get<std::vector<int>>();
        for (int& c : cl) --c;
      }
      if (j.contains("w_" + sfx)) (v == View::x ? spec.w_x : spec.w_y) = rows_matrix(j["w_" + sfx]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed synthetic spec: ") + e.what());
  }
  return spec;
}

std::vector<Cell> balanced_design(int n, int max_a, int max_b) {
  std::vector<Cell> cells;
  for (int a = 0; a <= max_a; ++a)
    for (int b = 0; b <= max_b; ++b) cells.push_back({a, b});
  std::vector<Cell> design(static_cast<size_t>(n));
  // Contiguous blocks so that the first rows are controls.
  for (int j = 0; j < n; ++j)
    design[static_cast<size_t>(j)] = cells[static_cast<size_t>(
        static_cast<long>(j) * static_cast<long>(cells.size()) / n)];
  return design;
}

SyntheticData generate(const SyntheticSpec& input, int n, std::uint64_t data_seed) {
  SyntheticSpec spec = input;
  spec.validate();
  const ModelLayout& layout = spec.layout;
  FixedComponents fixed;
  MatrixXd effects = MatrixXd::Zero(layout.n_effects(), layout.k_z());
  for (const auto& [name, vec] : spec.planted) effects.row(layout.effect_index(name)) = vec.transpose();
  fixed.effects = effects;
  fixed.w_x = spec.w_x;
  fixed.w_y = spec.w_y;
  fixed.psi_x = MatrixXd::Identity(layout.k_clusters_x, layout.k_clusters_x);
  fixed.psi_y = MatrixXd::Identity(layout.k_clusters_y, layout.k_clusters_y);
  fixed.clusters_x = spec.clusters_x;
  fixed.clusters_y = spec.clusters_y;
  fixed.resid_var_x = VectorXd::Constant(spec.p_x, spec.noise_sd * spec.noise_sd);
  fixed.resid_var_y = VectorXd::Constant(spec.p_y, spec.noise_sd * spec.noise_sd);
  fixed.ard_x = VectorXd::Ones(layout.k_z());
  fixed.ard_y = VectorXd::Ones(layout.k_z());
  fixed.scales_x = VectorXd::Ones(spec.p_x);
  fixed.scales_y = VectorXd::Ones(spec.p_y);
  fixed.mu_x = VectorXd::Zero(spec.p_x);
  fixed.mu_y = VectorXd::Zero(spec.p_y);

  const auto design = balanced_design(n, layout.max_a, layout.max_b);
  auto [truth, data] = sample_from_model(layout, Hyperparameters{}, design, spec.p_x, spec.p_y,
                                         data_seed, fixed);
  data.validate();
  return {std::move(data), std::move(truth)};
}

namespace {

std::vector<StudyRow> run_study(SyntheticSpec spec, const SamplerConfig& config) {
  spec.validate();
  Rng seeds(spec.data_seed);
  std::vector<StudyRow> rows;
  for (int n : spec.n_grid) {
    const std::uint64_t data_seed = seeds.next_seed();
    SyntheticData sd = generate(spec, n, data_seed);
    PairedDataset data = sd.data;
    if (spec.preprocess) data = center_scale_by_control(sd.data).first;
    PosteriorChain chain = sign_fix(gibbs_run(data, spec.layout, Hyperparameters{}, config), std::nullopt);
    // Truth is planted positive; each coordinate is mirrored independently.
    const auto summaries = summarize_effects(chain, true);
    for (const auto& s : summaries) {
      StudyRow row;
      row.n = n;
      row.effect = s.effect;
      row.dimension = s.dimension;
      row.truth = sd.truth.effects(spec.layout.effect_index(s.effect), s.dim);
      row.summary = s;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

std::vector<StudyRow> recovery_study(SyntheticSpec spec, const SamplerConfig& config) {
  return run_study(std::move(spec), config);
}

std::vector<StudyRow> specificity_study(SyntheticSpec spec, const SamplerConfig& config) {
  spec.validate();
  int view_seen = -1;
  for (const auto& [name, vec] : spec.planted) {
    for (int d = 0; d < spec.layout.k_z(); ++d) {
      if (vec(d) == 0.0) continue;
      const DimKind kind = spec.layout.kind(d);
      if (kind == DimKind::shared)
        throw InputError("specificity study plants a shared effect: " + name);
      const int view = kind == DimKind::x_specific ? 0 : 1;
      if (view_seen >= 0 && view_seen != view)
        throw InputError("specificity study must plant effects in one view only");
      view_seen = view;
    }
  }
  return run_study(std::move(spec), config);
}

void write_study_csv(const std::filesystem::path& path, const std::vector<StudyRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "n,effect,dimension,truth,statistic,value\n";
  static const char* names[] = {"q2.5", "q25", "q50", "q75", "q97.5"};
  for (const auto& r : rows) {
    const std::string prefix = std::to_string(r.n) + ',' + r.effect + ',' + r.dimension + ',' +
                               format_double(r.truth) + ',';
    out << prefix << "mean," << format_double(r.summary.mean) << '\n';
    for (int q = 0; q < 5; ++q) out << prefix << names[q] << ',' << format_double(r.summary.q[q]) << '\n';
    out << prefix << "found," << (r.summary.found ? 1 : 0) << '\n';
  }
}

Json study_metadata(const SyntheticSpec& spec, const SamplerConfig& config,
                    const std::string& study) {
  SyntheticSpec filled = spec;
  filled.validate();
  return Json{{"study", study},
              {"spec", to_json(filled)},
              {"sampler", to_json(config)},
              {"hyperparameters", to_json(Hyperparameters{})},
              {"design", "equal allocation over covariate cells"},
              {"generator_psi", "identity"},
              {"sign_fix", "per dimension, effect with largest absolute posterior mean"},
              {"summary", "each coordinate mirrored to a non-negative posterior mean"}};
}

}  // namespace mwmv
