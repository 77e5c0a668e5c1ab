#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mwmv/sampler.hpp"
#include "mwmv/state_io.hpp"

namespace mwmv {

/// Probability levels reported for every posterior summary.
inline constexpr double kQuantileLevels[] = {0.025, 0.25, 0.5, 0.75, 0.975};

/// Type-7 (linear interpolation) sample quantile.
double quantile(std::span<const double> values, double level);

struct EffectSummary {
  std::string effect;
  int dim = 0;
  std::string dimension;  // e.g. "shared_1"
  double mean = 0.0;
  double q[5] = {0, 0, 0, 0, 0};
  /// Equal-tailed 95% interval excludes zero.
  bool found = false;

  double lower() const { return q[0]; }
  double upper() const { return q[4]; }
  double width() const { return q[4] - q[0]; }
};

/// One summary per effect x latent dimension, effect-major. With `mirror`,
/// each coordinate's draws are negated when their mean is negative, so every
/// reported posterior has a non-negative mean.
std::vector<EffectSummary> summarize_effects(const PosteriorChain& chain, bool mirror = false);
const EffectSummary& find_summary(const std::vector<EffectSummary>& rows,
                                  const std::string& effect, int dim);

/// Fraction of stored states in which variables i and j share a cluster.
MatrixXd co_occurrence(const PosteriorChain& chain, View v);

/// Stored clustering closest in squared distance to the co-occurrence matrix,
/// relabelled 0..k-1 in order of first appearance.
std::vector<int> point_partition(const PosteriorChain& chain, View v);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct TracedCluster {
  int cluster = 0;  // 0-based label in the point partition
  double loading = 0.0;
  std::vector<std::string> members;
};

struct DimensionTrace {
  int dim = 0;
  std::string dimension;
  View view = View::x;
  std::vector<TracedCluster> clusters;
};

/// Latent dimension -> clusters of the point partition whose mean loading
/// lambda_i W_{v_i, d} is largest in magnitude. Members are the variables
/// whose co-occurrence with the cluster core is at least `threshold`.
std::vector<DimensionTrace> traceback(const PosteriorChain& chain,
                                      const std::vector<std::string>& names_x,
                                      const std::vector<std::string>& names_y,
                                      int top_clusters = 2, double threshold = 0.5);

struct EffectReport {
  std::vector<EffectSummary> effects;
  std::vector<DimensionTrace> traces;
};

EffectReport make_report(const PosteriorChain& chain, const std::vector<std::string>& names_x,
                         const std::vector<std::string>& names_y);
Json to_json(const EffectReport& report);
/// Boxplot-ready table: effect, dimension, mean, q2.5, q25, q50, q75, q97.5, found.
void write_quantile_csv(const std::filesystem::path& path,
                        const std::vector<EffectSummary>& rows);

}  // namespace mwmv
