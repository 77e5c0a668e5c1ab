#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mwmv/sampler.hpp"
#include "mwmv/state_io.hpp"
#include "mwmv/summary.hpp"

namespace mwmv {

/// Generator settings for synthetic paired data with known effects.
struct SyntheticSpec {
  std::vector<int> n_grid{12, 20, 40, 80, 200};
  Eigen::Index p_x = 200;
  Eigen::Index p_y = 200;
  ModelLayout layout;
  /// Effect name -> k_z vector. Unlisted effects are zero.
  std::map<std::string, VectorXd> planted;
  double noise_sd = 1.0;
  /// True partition per view (0-based); empty means equal contiguous blocks.
  std::vector<int> clusters_x, clusters_y;
  /// Projection matrices; empty means drawn once using `seed`: N(0, 1)
  /// entries, each column rescaled to norm sqrt(k_clusters).
  MatrixXd w_x, w_y;
  /// Standardize by the control population before fitting.
  bool preprocess = false;
  std::uint64_t seed = 1;
  /// Drives the datasets of a study. Replicates share W and differ here.
  std::uint64_t data_seed = 1;

  /// alpha on the shared, beta on the y-specific and the interaction on the
  /// x-specific dimension, each +2.
  static SyntheticSpec recovery_default();
  /// Fills in W and the partitions if empty and checks consistency.
  void validate();
};

Json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const Json& j);

struct SyntheticData {
  PairedDataset data;
  ModelState truth;
};

/// Equal allocation of n samples over the (a, b) cells in row-major order.
std::vector<Cell> balanced_design(int n, int max_a, int max_b);

/// Draws a dataset of n samples; `data_seed` drives z, factor scores and noise.
SyntheticData generate(const SyntheticSpec& spec, int n, std::uint64_t data_seed);

struct StudyRow {
  int n = 0;
  std::string effect;
  std::string dimension;
  double truth = 0.0;
  EffectSummary summary;
};

/// Fits every n of the grid and summarizes all effect coordinates. Each
/// coordinate's posterior is mirrored to a non-negative mean, since planted
/// effects are positive and every sign is only identified jointly.
std::vector<StudyRow> recovery_study(SyntheticSpec spec, const SamplerConfig& config);

/// Same pipeline, but every planted effect must be zero outside one view's
/// specific dimensions.
std::vector<StudyRow> specificity_study(SyntheticSpec spec, const SamplerConfig& config);

/// Long table: n, effect, dimension, truth, statistic, value; statistics are
/// mean, q2.5, q25, q50, q75, q97.5 and found.
void write_study_csv(const std::filesystem::path& path, const std::vector<StudyRow>& rows);
/// Sidecar describing the synthetic spec and sampler settings of a study.
Json study_metadata(const SyntheticSpec& spec, const SamplerConfig& config,
                    const std::string& study);

}  // namespace mwmv
