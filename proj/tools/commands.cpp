#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "mwmv/csv.hpp"
#include "mwmv/errors.hpp"
#include "mwmv/preprocess.hpp"
#include "mwmv/summary.hpp"

namespace mwmv::cli {

namespace fs = std::filesystem;

namespace {

const char* mode_name(GridMode m) { return m == GridMode::product ? "product" : "per_view"; }

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

PairedDataset load(const DataPaths& in) {
  PairedDataset data = load_dataset(in.x, in.y, in.covariates);
  data.validate();
  return data;
}

// Covariate levels always come from the data.
ModelLayout fitted_layout(const RunConfig& config, const PairedDataset& data) {
  ModelLayout layout = config.layout;
  layout.max_a = data.max_a();
  layout.max_b = data.max_b();
  layout.validate_against(data);
  return layout;
}

}  // namespace

Json to_json(const RunConfig& c) {
  Json layout = to_json(c.layout);
  layout.erase("max_a");
  layout.erase("max_b");
  return Json{{"layout", layout},
              {"hypers", to_json(c.hypers)},
              {"sampler", to_json(c.sampler)},
              {"selection",
               {{"cluster_counts_x", c.selection.cluster_counts_x},
                {"cluster_counts_y", c.selection.cluster_counts_y},
                {"folds", c.selection.folds},
                {"mode", mode_name(c.selection.mode)},
                {"tie_se", c.selection.tie_se},
                {"threads", c.selection.threads}}},
              {"anchor_effect", c.anchor_effect},
              {"synthetic", to_json(c.synthetic)}};
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) throw InputError("config must be a JSON object");
    if (j.contains("layout")) c.layout = layout_from_json(j["layout"]);
    if (j.contains("hypers")) c.hypers = hypers_from_json(j["hypers"]);
    if (j.contains("sampler")) c.sampler = sampler_config_from_json(j["sampler"]);
    if (j.contains("selection")) {
      const Json& s = j["selection"];
      auto& g = c.selection;
      if (s.contains("cluster_counts_x")) g.cluster_counts_x = s["cluster_counts_x"].get<std::vector<int>>();
      if (s.contains("cluster_counts_y")) g.cluster_counts_y = s["cluster_counts_y"].get<std::vector<int>>();
      g.folds = s.value("folds", g.folds);
      g.tie_se = s.value("tie_se", g.tie_se);
      g.threads = s.value("threads", g.threads);
      const std::string mode = s.value("mode", std::string(mode_name(g.mode)));
      if (mode == "product")
        g.mode = GridMode::product;
      else if (mode == "per_view")
        g.mode = GridMode::per_view;
      else
        throw InputError("unknown selection mode: " + mode);
    }
    c.anchor_effect = j.value("anchor_effect", c.anchor_effect);
    if (j.contains("synthetic")) c.synthetic = synthetic_spec_from_json(j["synthetic"]);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::optional<fs::path>& path) {
  if (!path) return RunConfig{};
  std::ifstream in(*path);
  if (!in) throw InputError("cannot open config " + path->string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path->string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::vector<int> parse_grid(const std::string& text) {
  auto to_int = [&](const std::string& s) {
    try {
      size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw InputError("bad --grid value '" + text + "'");
    }
  };
  std::vector<int> out;
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    const int lo = to_int(text.substr(0, colon));
    const int hi = to_int(text.substr(colon + 1));
    if (lo > hi) throw InputError("empty --grid range '" + text + "'");
    for (int k = lo; k <= hi; ++k) out.push_back(k);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_int(item));
  }
  if (out.empty()) throw InputError("empty --grid");
  return out;
}

void cmd_preprocess(const DataPaths& in, const fs::path& out) {
  const PairedDataset raw = load(in);
  auto [data, report] = center_scale_by_control(raw);
  ensure_dir(out);
  save_dataset(data, out / "x.csv", out / "y.csv", out / "covariates.csv");
  write_json(out / "preprocess.json", to_json(report));
  std::cout << "preprocessed " << data.n() << " samples, " << data.x.cols() << " x and "
            << data.y.cols() << " y variables kept, " << report.dropped_variables.size()
            << " dropped\n";
}

SelectionResult cmd_select(const DataPaths& in, const RunConfig& config, const fs::path& out) {
  const PairedDataset data = load(in);
  const ModelLayout layout = fitted_layout(config, data);
  SelectionGrid grid = config.selection;
  grid.config = config.sampler;
  const SelectionResult result = cv_select(data, grid, config.hypers, layout);
  ensure_dir(out);
  write_score_csv(out / "scores.csv", result.table);
  write_json(out / "selection.json", Json{{"k_clusters_x", result.k_clusters_x},
                                          {"k_clusters_y", result.k_clusters_y},
                                          {"score", result.score},
                                          {"mode", mode_name(grid.mode)},
                                          {"folds", grid.folds}});
  std::cout << "selected k_clusters_x=" << result.k_clusters_x
            << " k_clusters_y=" << result.k_clusters_y << '\n';
  return result;
}

EffectReport cmd_fit(const DataPaths& in, const RunConfig& config, const fs::path& out) {
  const PairedDataset data = load(in);
  const ModelLayout layout = fitted_layout(config, data);
  config.sampler.validate(layout);
  std::optional<std::string> anchor;
  if (!config.anchor_effect.empty()) {
    if (layout.effect_index(config.anchor_effect) < 0)
      throw InputError("unknown anchor effect: " + config.anchor_effect);
    anchor = config.anchor_effect;
  }
  const PosteriorChain chain = sign_fix(gibbs_run(data, layout, config.hypers, config.sampler), anchor);
  ensure_dir(out);
  write_chain(out / "chain.jsonl", chain, data.variable_names_x, data.variable_names_y);
  const EffectReport report = make_report(chain, data.variable_names_x, data.variable_names_y);
  write_json(out / "report.json", to_json(report));
  write_quantile_csv(out / "quantiles.csv", report.effects);
  for (const auto& e : report.effects)
    if (e.found) std::cout << "found " << e.effect << " on " << e.dimension << '\n';
  return report;
}

void cmd_synth(const RunConfig& config, std::optional<int> n, const fs::path& out) {
  SyntheticSpec spec = config.synthetic;
  spec.validate();
  const int size = n ? *n : spec.n_grid.back();
  if (size < 1) throw InputError("sample count must be positive");
  const SyntheticData d = generate(spec, size, spec.data_seed);
  ensure_dir(out);
  save_dataset(d.data, out / "x.csv", out / "y.csv", out / "covariates.csv");
  write_json(out / "truth.json", Json{{"n", size},
                                      {"spec", to_json(spec)},
                                      {"state", to_json(d.truth, spec.layout)}});
  std::cout << "wrote " << size << " samples to " << out.string() << '\n';
}

EffectReport cmd_report(const fs::path& chain_path, const fs::path& out) {
  const LoadedChain loaded = read_chain(chain_path);
  const EffectReport report = make_report(loaded.chain, loaded.names_x, loaded.names_y);
  ensure_dir(out);
  write_json(out / "report.json", to_json(report));
  write_quantile_csv(out / "quantiles.csv", report.effects);
  return report;
}

void cmd_study(const RunConfig& config, const std::string& kind, const fs::path& out) {
  std::vector<StudyRow> rows;
  if (kind == "recovery")
    rows = recovery_study(config.synthetic, config.sampler);
  else if (kind == "specificity")
    rows = specificity_study(config.synthetic, config.sampler);
  else
    throw InputError("unknown study kind: " + kind);
  ensure_dir(out);
  write_study_csv(out / "study.csv", rows);
  write_json(out / "study.json", study_metadata(config.synthetic, config.sampler, kind));
}

}  // namespace mwmv::cli
