#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mwmv/types.hpp"

namespace mwmv {

struct DroppedVariable {
  View view = View::x;
  std::string name;
  std::string reason;
};

/// Control-population statistics used to standardize each variable. Means and
/// sds cover the retained variables only.
struct PreprocessReport {
  VectorXd control_means_x, control_means_y;
  VectorXd control_sds_x, control_sds_y;
  int n_control = 0;
  std::vector<DroppedVariable> dropped_variables;
};

/// Control sds below this are treated as zero and the variable is dropped.
inline constexpr double kMinControlSd = 1e-12;

/// Subtracts the control-population (a=0, b=0) mean of every variable and
/// divides by its control standard deviation (n-1 denominator). Variables that
/// are constant over the controls are dropped and listed in the report.
std::pair<PairedDataset, PreprocessReport> center_scale_by_control(const PairedDataset& raw);

}  // namespace mwmv
