#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mwmv/conditionals.hpp"
#include "mwmv/model.hpp"
#include "mwmv/types.hpp"

namespace mwmv {

/// Gibbs blocks in sweep order.
enum class Block {
  clusters,
  resid_var,
  location_scale,
  latents,
  w,
  ard,
  psi,
  z,
  effects,
};
inline constexpr int kBlockCount = 9;
const char* block_name(Block b);

enum class InitMode { from_prior, supplied_state };

struct SamplerConfig {
  int burn_in = 1000;
  int n_samples = 1000;
  int thin = 1;
  std::uint64_t seed = 1;
  InitMode init = InitMode::from_prior;
  /// Replace prior-drawn cluster assignments by average-linkage grouping of
  /// centered variables before the first sweep.
  bool agglomerative_init = true;
  /// With agglomerative_init, this many initial burn-in sweeps keep the
  /// assignments fixed while the other blocks adapt to them.
  int warmup_sweeps = 50;
  /// After the z and effects blocks, also draw (effects, z) jointly: effects
  /// with z integrated out, then z given them. Effects and z are strongly
  /// coupled when W is small, and this move breaks the coupling.
  bool joint_effects_z = true;
  /// Starting point when init == supplied_state.
  std::optional<ModelState> initial_state;
  /// Blocks that are updated; a disabled block keeps its initial value.
  std::array<bool, kBlockCount> enabled{true, true, true, true, true, true, true, true, true};
  /// Latent dimensions held fixed (their z, W, ARD and effect coordinates).
  FrozenDims frozen_dims;

  bool is_enabled(Block b) const { return enabled[static_cast<size_t>(b)]; }
  void set_only(std::initializer_list<Block> blocks);
  void validate(const ModelLayout& layout) const;
};

struct PosteriorChain {
  std::vector<ModelState> states;
  SamplerConfig config;
  ModelLayout layout;
  Hyperparameters hypers;
  /// Cumulative +-1 applied to each latent dimension by sign_fix.
  std::vector<int> sign_flips;
};

// Single-block updates. Each changes only its block of `state`.
void update_z(ModelState& state, const PairedDataset& data, const ModelLayout& layout, Rng& rng,
              const FrozenDims& frozen = {});
void update_effects(ModelState& state, const PairedDataset& data, const ModelLayout& layout,
                    const Hyperparameters& hypers, Rng& rng, const FrozenDims& frozen = {});
void update_effects_z_jointly(ModelState& state, const PairedDataset& data,
                              const ModelLayout& layout, const Hyperparameters& hypers, Rng& rng,
                              const FrozenDims& frozen = {});
void update_latents_fa(ModelState& state, const PairedDataset& data, View v, Rng& rng);
void update_w(ModelState& state, const ModelLayout& layout, View v, Rng& rng,
              const FrozenDims& frozen = {});
void update_ard(ModelState& state, const ModelLayout& layout, const Hyperparameters& hypers,
                Rng& rng, const FrozenDims& frozen = {});
void update_psi(ModelState& state, const ModelLayout& layout, const Hyperparameters& hypers,
                View v, Rng& rng);
/// Sequential single-site update of every variable's cluster index.
void update_clusters(ModelState& state, const PairedDataset& data,
                     const Hyperparameters& hypers, View v, Rng& rng);
void update_resid_var(ModelState& state, const PairedDataset& data,
                      const Hyperparameters& hypers, View v, Rng& rng);
/// No-op unless hypers.free_location_scale.
void update_location_scale(ModelState& state, const PairedDataset& data,
                           const Hyperparameters& hypers, View v, Rng& rng);

/// One full sweep in the fixed block order.
void gibbs_sweep(ModelState& state, const PairedDataset& data, const ModelLayout& layout,
                 const Hyperparameters& hypers, const SamplerConfig& config, Rng& rng,
                 int sweep_index = 0);

/// Starting state for a run (prior draw or the supplied state).
ModelState initial_state(const PairedDataset& data, const ModelLayout& layout,
                         const Hyperparameters& hypers, const SamplerConfig& config, Rng& rng);

/// Cluster labels from average-linkage agglomeration on squared Euclidean
/// distance between centered columns.
std::vector<int> agglomerative_clusters(const MatrixXd& data, int k);

/// Runs the Gibbs sampler and returns the thinned post-burn-in states.
PosteriorChain gibbs_run(const PairedDataset& data, const ModelLayout& layout,
                         const Hyperparameters& hypers, const SamplerConfig& config);

/// Flips z, W columns and effect coordinates of each latent dimension whose
/// anchor-effect posterior mean is negative. Without an anchor name each
/// dimension uses the effect with the largest absolute posterior mean.
PosteriorChain sign_fix(PosteriorChain chain, const std::optional<std::string>& anchor);

/// Flips dimension d of individual states (an exact symmetry) so that each
/// state's W columns and effect coordinates agree in direction with their
/// running consensus. For states drawn by independent chains.
void align_dimension_signs(std::vector<ModelState>& states, const ModelLayout& layout, int d);

/// Adds one shared dimension: every stored state seeds a short chain
/// (config.burn_in sweeps) in which the original shared dimensions are
/// frozen and all others are sampled, and
/// the final state of each short chain is kept, with the new dimension's
/// sign aligned across states.
PosteriorChain deflate_add_component(const PosteriorChain& chain, const PairedDataset& data,
                                     const ModelLayout& extended, const SamplerConfig& config);

/// Layout with one more shared dimension, plus the state mapped into it
/// (new coordinates zero). The new dimension sits at index layout.k_shared.
ModelLayout extend_shared(const ModelLayout& layout);
ModelState embed_state(const ModelState& state, const ModelLayout& from, const ModelLayout& to);

}  // namespace mwmv
