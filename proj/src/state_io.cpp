#include "mwmv/state_io.hpp"

#include <fstream>

#include "mwmv/errors.hpp"

namespace mwmv {

namespace {

Json matrix_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

MatrixXd matrix_from(const Json& j, Eigen::Index cols) {
  MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const Json& row = j.at(static_cast<size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw InputError("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<size_t>(c)).get<double>();
  }
  return m;
}

VectorXd vector_from(const Json& j) {
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<size_t>(i)).get<double>();
  return v;
}

const char* init_name(InitMode m) {
  return m == InitMode::from_prior ? "from_prior" : "supplied_state";
}

}  // namespace

Json to_json(const ModelLayout& l) {
  return Json{{"k_shared", l.k_shared},         {"k_xspec", l.k_xspec},
              {"k_yspec", l.k_yspec},           {"k_clusters_x", l.k_clusters_x},
              {"k_clusters_y", l.k_clusters_y}, {"max_a", l.max_a},
              {"max_b", l.max_b}};
}

ModelLayout layout_from_json(const Json& j) {
  ModelLayout l;
  l.k_shared = j.value("k_shared", l.k_shared);
  l.k_xspec = j.value("k_xspec", l.k_xspec);
  l.k_yspec = j.value("k_yspec", l.k_yspec);
  l.k_clusters_x = j.value("k_clusters_x", l.k_clusters_x);
  l.k_clusters_y = j.value("k_clusters_y", l.k_clusters_y);
  l.max_a = j.value("max_a", l.max_a);
  l.max_b = j.value("max_b", l.max_b);
  return l;
}

Json to_json(const Hyperparameters& h) {
  Json j{{"ard_shape", h.ard_shape},
         {"ard_scale", h.ard_scale},
         {"resid_dof", h.resid_dof},
         {"resid_scale", h.resid_scale},
         {"dirichlet_conc", h.dirichlet_conc},
         {"effect_prior_var", h.effect_prior_var},
         {"free_location_scale", h.free_location_scale},
         {"location_prior_var", h.location_prior_var},
         {"scale_prior_mean", h.scale_prior_mean},
         {"scale_prior_var", h.scale_prior_var}};
  j["iw_scale_x"] = h.iw_scale_x.size() ? matrix_json(h.iw_scale_x) : Json(nullptr);
  j["iw_scale_y"] = h.iw_scale_y.size() ? matrix_json(h.iw_scale_y) : Json(nullptr);
  j["iw_dof_x"] = h.iw_dof_x ? Json(*h.iw_dof_x) : Json(nullptr);
  j["iw_dof_y"] = h.iw_dof_y ? Json(*h.iw_dof_y) : Json(nullptr);
  return j;
}

Hyperparameters hypers_from_json(const Json& j) {
  Hyperparameters h;
  h.ard_shape = j.value("ard_shape", h.ard_shape);
  h.ard_scale = j.value("ard_scale", h.ard_scale);
  h.resid_dof = j.value("resid_dof", h.resid_dof);
  h.resid_scale = j.value("resid_scale", h.resid_scale);
  h.dirichlet_conc = j.value("dirichlet_conc", h.dirichlet_conc);
  h.effect_prior_var = j.value("effect_prior_var", h.effect_prior_var);
  h.free_location_scale = j.value("free_location_scale", h.free_location_scale);
  h.location_prior_var = j.value("location_prior_var", h.location_prior_var);
  h.scale_prior_mean = j.value("scale_prior_mean", h.scale_prior_mean);
  h.scale_prior_var = j.value("scale_prior_var", h.scale_prior_var);
  auto mat = [&](const char* key, MatrixXd& out) {
    if (j.contains(key) && !j[key].is_null()) out = matrix_from(j[key], static_cast<Eigen::Index>(j[key].size()));
  };
  mat("iw_scale_x", h.iw_scale_x);
  mat("iw_scale_y", h.iw_scale_y);
  if (j.contains("iw_dof_x") && !j["iw_dof_x"].is_null()) h.iw_dof_x = j["iw_dof_x"].get<double>();
  if (j.contains("iw_dof_y") && !j["iw_dof_y"].is_null()) h.iw_dof_y = j["iw_dof_y"].get<double>();
  return h;
}

Json to_json(const SamplerConfig& c) {
  Json blocks = Json::object();
  for (int b = 0; b < kBlockCount; ++b)
    blocks[block_name(static_cast<Block>(b))] = c.enabled[static_cast<size_t>(b)];
  Json frozen = Json::array();
  for (bool f : c.frozen_dims) frozen.push_back(f);
  return Json{{"burn_in", c.burn_in},
              {"n_samples", c.n_samples},
              {"thin", c.thin},
              {"seed", c.seed},
              {"init", init_name(c.init)},
              {"agglomerative_init", c.agglomerative_init},
              {"joint_effects_z", c.joint_effects_z},
              {"warmup_sweeps", c.warmup_sweeps},
              {"blocks", blocks},
              {"frozen_dims", frozen}};
}

SamplerConfig sampler_config_from_json(const Json& j) {
  SamplerConfig c;
  c.burn_in = j.value("burn_in", c.burn_in);
  c.n_samples = j.value("n_samples", c.n_samples);
  c.thin = j.value("thin", c.thin);
  c.seed = j.value("seed", c.seed);
  c.agglomerative_init = j.value("agglomerative_init", c.agglomerative_init);
  c.joint_effects_z = j.value("joint_effects_z", c.joint_effects_z);
  c.warmup_sweeps = j.value("warmup_sweeps", c.warmup_sweeps);
  const std::string init = j.value("init", std::string("from_prior"));
  if (init == "from_prior")
    c.init = InitMode::from_prior;
  else if (init == "supplied_state")
    c.init = InitMode::supplied_state;
  else
    throw InputError("unknown init mode: " + init);
  if (j.contains("blocks"))
    for (int b = 0; b < kBlockCount; ++b)
      c.enabled[static_cast<size_t>(b)] =
          j["blocks"].value(block_name(static_cast<Block>(b)), true);
  if (j.contains("frozen_dims"))
    for (const auto& f : j["frozen_dims"]) c.frozen_dims.push_back(f.get<bool>());
  return c;
}

Json to_json(const ModelState& s, const ModelLayout& layout) {
  Json j = Json::object();
  for (View v : kViews) {
    const ViewState& vs = s.view(v);
    const std::string sfx = std::string("_") + view_name(v);
    Json clusters = Json::array();
    for (int c : vs.clusters) clusters.push_back(c + 1);
    j["clusters" + sfx] = std::move(clusters);
  }
  for (View v : kViews) j[std::string("scales_") + view_name(v)] = vector_json(s.view(v).scales);
  for (View v : kViews) j[std::string("resid_var_") + view_name(v)] = vector_json(s.view(v).resid_var);
  for (View v : kViews) j[std::string("w_") + view_name(v)] = matrix_json(s.view(v).w);
  for (View v : kViews) j[std::string("ard_") + view_name(v)] = vector_json(s.view(v).ard);
  for (View v : kViews) j[std::string("psi_") + view_name(v)] = matrix_json(s.view(v).psi);
  Json effects = Json::object();
  for (int e = 0; e < layout.n_effects(); ++e)
    effects[layout.effect_name(e)] = vector_json(s.effects.row(e).transpose());
  j["effects"] = std::move(effects);
  j["z"] = matrix_json(s.z);
  j["xlat"] = matrix_json(s.x.lat);
  j["ylat"] = matrix_json(s.y.lat);
  for (View v : kViews) j[std::string("mu_") + view_name(v)] = vector_json(s.view(v).mu);
  return j;
}

ModelState state_from_json(const Json& j, const ModelLayout& layout) {
  ModelState s;
  const int kz = layout.k_z();
  try {
    for (View v : kViews) {
      ViewState& vs = s.view(v);
      const std::string sfx = std::string("_") + view_name(v);
      const int k = layout.k_clusters(v);
      for (const auto& c : j.at("clusters" + sfx)) vs.clusters.push_back(c.get<int>() - 1);
      vs.scales = vector_from(j.at("scales" + sfx));
      vs.resid_var = vector_from(j.at("resid_var" + sfx));
      vs.w = matrix_from(j.at("w" + sfx), kz);
      vs.ard = vector_from(j.at("ard" + sfx));
      vs.psi = matrix_from(j.at("psi" + sfx), k);
      vs.mu = vector_from(j.at("mu" + sfx));
      vs.lat = matrix_from(j.at(v == View::x ? "xlat" : "ylat"), k);
    }
    s.effects = MatrixXd::Zero(layout.n_effects(), kz);
    const Json& effects = j.at("effects");
    for (int e = 0; e < layout.n_effects(); ++e)
      s.effects.row(e) = vector_from(effects.at(layout.effect_name(e))).transpose();
    s.z = matrix_from(j.at("z"), kz);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed state record: ") + e.what());
  }
  s.check_consistent(layout, s.z.rows(), static_cast<Eigen::Index>(s.x.clusters.size()),
                     static_cast<Eigen::Index>(s.y.clusters.size()));
  return s;
}

Json to_json(const PreprocessReport& r) {
  Json dropped = Json::array();
  for (const auto& d : r.dropped_variables)
    dropped.push_back({{"view", view_name(d.view)}, {"name", d.name}, {"reason", d.reason}});
  return Json{{"n_control", r.n_control},
              {"control_means_x", vector_json(r.control_means_x)},
              {"control_sds_x", vector_json(r.control_sds_x)},
              {"control_means_y", vector_json(r.control_means_y)},
              {"control_sds_y", vector_json(r.control_sds_y)},
              {"dropped_variables", dropped}};
}

void write_chain(const std::filesystem::path& path, const PosteriorChain& chain,
                 const std::vector<std::string>& names_x, const std::vector<std::string>& names_y) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  const Json header{{"format", "mwmv-chain"},
                    {"version", 1},
                    {"n_states", chain.states.size()},
                    {"layout", to_json(chain.layout)},
                    {"hypers", to_json(chain.hypers)},
                    {"config", to_json(chain.config)},
                    {"sign_flips", chain.sign_flips},
                    {"variable_names_x", names_x},
                    {"variable_names_y", names_y}};
  out << header.dump() << '\n';
  for (const auto& s : chain.states) out << to_json(s, chain.layout).dump() << '\n';
}

LoadedChain read_chain(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + " is empty");
  LoadedChain out;
  try {
    const Json header = Json::parse(line);
    if (header.value("format", std::string()) != "mwmv-chain")
      throw InputError(path.string() + " is not a chain checkpoint");
    out.chain.layout = layout_from_json(header.at("layout"));
    out.chain.hypers = hypers_from_json(header.at("hypers"));
    out.chain.config = sampler_config_from_json(header.at("config"));
    out.chain.sign_flips = header.at("sign_flips").get<std::vector<int>>();
    out.names_x = header.at("variable_names_x").get<std::vector<std::string>>();
    out.names_y = header.at("variable_names_y").get<std::vector<std::string>>();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      out.chain.states.push_back(state_from_json(Json::parse(line), out.chain.layout));
    }
    if (out.chain.states.size() != header.at("n_states").get<size_t>())
      throw InputError(path.string() + ": truncated chain checkpoint");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace mwmv
