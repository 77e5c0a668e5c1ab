#pragma once

#include <span>
#include <string>
#include <vector>

#include "mwmv/sampler.hpp"

namespace mwmv {

/// Integrated autocorrelation time using Geyer's initial positive sequence.
double autocorrelation_time(std::span<const double> trace);

/// Effective sample size: length / autocorrelation time.
double effective_sample_size(std::span<const double> trace);

/// Variance of the trace mean, corrected for autocorrelation.
double mean_variance(std::span<const double> trace);

/// Geweke convergence z-score comparing the first and last fractions.
double geweke_z(std::span<const double> trace, double first = 0.1, double last = 0.5);

struct ScalarDiagnostic {
  std::string name;
  double ess = 0.0;
  double geweke = 0.0;
};

/// ESS and Geweke z for every effect coordinate and log ARD variance.
std::vector<ScalarDiagnostic> diagnostics(const PosteriorChain& chain);

}  // namespace mwmv
