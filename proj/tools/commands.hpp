#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mwmv/experiments.hpp"
#include "mwmv/selection.hpp"
#include "mwmv/state_io.hpp"

namespace mwmv::cli {

/// Everything a command reads from the config file, with defaults.
struct RunConfig {
  ModelLayout layout;
  Hyperparameters hypers;
  SamplerConfig sampler;
  SelectionGrid selection;
  /// Effect used to orient every latent dimension; empty picks each
  /// dimension's dominant effect.
  std::string anchor_effect = "alpha_1";
  SyntheticSpec synthetic = SyntheticSpec::recovery_default();
};

Json to_json(const RunConfig& c);
/// Sections missing from the document keep their defaults.
RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::optional<std::filesystem::path>& path);

/// Parses "2,3,5" or the inclusive range "2:5".
std::vector<int> parse_grid(const std::string& text);

struct DataPaths {
  std::filesystem::path x, y, covariates;
};

void cmd_preprocess(const DataPaths& in, const std::filesystem::path& out);
SelectionResult cmd_select(const DataPaths& in, const RunConfig& config,
                           const std::filesystem::path& out);
EffectReport cmd_fit(const DataPaths& in, const RunConfig& config,
                     const std::filesystem::path& out);
void cmd_synth(const RunConfig& config, std::optional<int> n, const std::filesystem::path& out);
EffectReport cmd_report(const std::filesystem::path& chain, const std::filesystem::path& out);
void cmd_study(const RunConfig& config, const std::string& kind, const std::filesystem::path& out);

}  // namespace mwmv::cli
