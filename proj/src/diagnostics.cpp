#include "mwmv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mwmv {

namespace {

double mean_of(std::span<const double> t) {
  return std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
}

double autocovariance(std::span<const double> t, double mean, size_t lag) {
  double acc = 0.0;
  for (size_t i = 0; i + lag < t.size(); ++i) acc += (t[i] - mean) * (t[i + lag] - mean);
  return acc / static_cast<double>(t.size());
}

}  // namespace

double autocorrelation_time(std::span<const double> trace) {
  const size_t n = trace.size();
  if (n < 4) return 1.0;
  const double m = mean_of(trace);
  const double c0 = autocovariance(trace, m, 0);
  if (!(c0 > 0.0)) return 1.0;
  // Sum consecutive pairs while positive and monotonically decreasing.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (size_t lag = 0; lag + 1 < n; lag += 2) {
    double pair = (autocovariance(trace, m, lag) + autocovariance(trace, m, lag + 1)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  return std::max(tau, 1.0 / static_cast<double>(n));
}

double effective_sample_size(std::span<const double> trace) {
  return static_cast<double>(trace.size()) / autocorrelation_time(trace);
}

double mean_variance(std::span<const double> trace) {
  const double m = mean_of(trace);
  const double c0 = autocovariance(trace, m, 0);
  return c0 * autocorrelation_time(trace) / static_cast<double>(trace.size());
}

double geweke_z(std::span<const double> trace, double first, double last) {
  const size_t n = trace.size();
  const auto na = static_cast<size_t>(std::floor(first * static_cast<double>(n)));
  const auto nb = static_cast<size_t>(std::floor(last * static_cast<double>(n)));
  if (na < 2 || nb < 2) return 0.0;
  const auto a = trace.first(na);
  const auto b = trace.last(nb);
  const double var = mean_variance(a) + mean_variance(b);
  if (!(var > 0.0)) return 0.0;
  return (mean_of(a) - mean_of(b)) / std::sqrt(var);
}

std::vector<ScalarDiagnostic> diagnostics(const PosteriorChain& chain) {
  std::vector<ScalarDiagnostic> out;
  const ModelLayout& layout = chain.layout;
  std::vector<double> trace(chain.states.size());
  auto add = [&](std::string name, auto&& get) {
    for (size_t t = 0; t < chain.states.size(); ++t) trace[t] = get(chain.states[t]);
    out.push_back({std::move(name), effective_sample_size(trace), geweke_z(trace)});
  };
  for (int e = 0; e < layout.n_effects(); ++e)
    for (int d = 0; d < layout.k_z(); ++d)
      add(layout.effect_name(e) + "[" + layout.dimension_name(d) + "]",
          [&](const ModelState& s) { return s.effects(e, d); });
  for (View v : kViews)
    for (int d = 0; d < layout.k_z(); ++d) {
      if (!layout.active(v, d)) continue;
      add(std::string("log_ard_") + view_name(v) + "[" + layout.dimension_name(d) + "]",
          [&](const ModelState& s) { return std::log(s.view(v).ard(d)); });
    }
  return out;
}

}  // namespace mwmv
