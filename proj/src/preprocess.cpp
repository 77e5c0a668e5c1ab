#include "mwmv/preprocess.hpp"

#include <cmath>

#include "mwmv/errors.hpp"

namespace mwmv {

namespace {

struct ViewScaling {
  MatrixXd data;
  std::vector<std::string> names;
  VectorXd means;
  VectorXd sds;
};

ViewScaling scale_view(const MatrixXd& m, const std::vector<std::string>& names,
                       const std::vector<int>& control, View v,
                       std::vector<DroppedVariable>& dropped) {
  const MatrixXd ctrl = m(control, Eigen::all);
  const double nc = static_cast<double>(control.size());
  std::vector<int> keep;
  std::vector<double> means, sds;
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    double mean = ctrl.col(i).mean();
    mean += (ctrl.col(i).array() - mean).mean();  // second pass absorbs rounding
    const double sd = std::sqrt((ctrl.col(i).array() - mean).square().sum() / (nc - 1.0));
    if (!(sd >= kMinControlSd)) {
      dropped.push_back({v, names[static_cast<size_t>(i)], "zero variance in control population"});
      continue;
    }
    keep.push_back(static_cast<int>(i));
    means.push_back(mean);
    sds.push_back(sd);
  }
  ViewScaling out;
  out.means = Eigen::Map<const VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  out.sds = Eigen::Map<const VectorXd>(sds.data(), static_cast<Eigen::Index>(sds.size()));
  out.data = m(Eigen::all, keep);
  for (Eigen::Index c = 0; c < out.data.cols(); ++c) {
    auto col = out.data.col(c);
    col = (col.array() - out.means(c)) / out.sds(c);
    // When the mean is large relative to the sd, the subtraction above loses
    // digits; standardizing once more on the O(1) values restores them.
    const VectorXd t = col(control);
    const double m2 = t.mean();
    const double sd2 = std::sqrt((t.array() - m2).square().sum() / (nc - 1.0));
    col = (col.array() - m2) / sd2;
  }
  for (int i : keep) out.names.push_back(names[static_cast<size_t>(i)]);
  return out;
}

}  // namespace

std::pair<PairedDataset, PreprocessReport> center_scale_by_control(const PairedDataset& raw_in) {
  PairedDataset raw = raw_in;
  raw.validate();
  std::vector<int> control;
  for (size_t j = 0; j < raw.covariates.size(); ++j)
    if (raw.covariates[j] == Cell{}) control.push_back(static_cast<int>(j));
  if (control.empty()) throw DesignError("covariate cell empty: control population has no samples");
  if (control.size() < 2)
    throw DesignError("control population needs at least 2 samples to estimate a standard deviation");

  PreprocessReport report;
  report.n_control = static_cast<int>(control.size());
  auto sx = scale_view(raw.x, raw.variable_names_x, control, View::x, report.dropped_variables);
  auto sy = scale_view(raw.y, raw.variable_names_y, control, View::y, report.dropped_variables);
  if (sx.data.cols() == 0 || sy.data.cols() == 0)
    throw InputError("every variable of a view was dropped during preprocessing");

  PairedDataset out;
  out.x = std::move(sx.data);
  out.y = std::move(sy.data);
  out.variable_names_x = std::move(sx.names);
  out.variable_names_y = std::move(sy.names);
  out.covariates = raw.covariates;
  out.sample_ids = raw.sample_ids;
  report.control_means_x = std::move(sx.means);
  report.control_sds_x = std::move(sx.sds);
  report.control_means_y = std::move(sy.means);
  report.control_sds_y = std::move(sy.sds);
  return {std::move(out), std::move(report)};
}

}  // namespace mwmv
