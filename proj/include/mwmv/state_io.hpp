#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mwmv/preprocess.hpp"
#include "mwmv/sampler.hpp"
#include "mwmv/types.hpp"

namespace mwmv {

using Json = nlohmann::ordered_json;

Json to_json(const ModelLayout& layout);
ModelLayout layout_from_json(const Json& j);

Json to_json(const Hyperparameters& hypers);
/// Missing keys keep their defaults.
Hyperparameters hypers_from_json(const Json& j);

Json to_json(const SamplerConfig& config);
SamplerConfig sampler_config_from_json(const Json& j);

/// State record. Field names follow ModelState (clusters_x, w_x, ..., xlat,
/// ylat); cluster indices are written 1-based; matrices are arrays of rows;
/// effects are an object keyed by effect name.
Json to_json(const ModelState& state, const ModelLayout& layout);
ModelState state_from_json(const Json& j, const ModelLayout& layout);

Json to_json(const PreprocessReport& report);

/// Chain checkpoint: JSON Lines, first line a header (layout, hypers, config,
/// sign flips, variable names), then one state record per line.
void write_chain(const std::filesystem::path& path, const PosteriorChain& chain,
                 const std::vector<std::string>& names_x, const std::vector<std::string>& names_y);

struct LoadedChain {
  PosteriorChain chain;
  std::vector<std::string> names_x;
  std::vector<std::string> names_y;
};
LoadedChain read_chain(const std::filesystem::path& path);

}  // namespace mwmv
