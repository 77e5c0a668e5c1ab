#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mwmv/types.hpp"

namespace mwmv {

/// Samples-by-variables table: header row of variable names, leading
/// sample-id column.
struct LabeledMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_names;
  MatrixXd values;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& text);

std::vector<std::string> split_csv_line(const std::string& line);

LabeledMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const LabeledMatrix& m);

/// Covariate file with columns (sample_id, a, b).
struct CovariateTable {
  std::vector<std::string> sample_ids;
  std::vector<Cell> cells;
};
CovariateTable read_covariates_csv(const std::filesystem::path& path);
void write_covariates_csv(const std::filesystem::path& path, const CovariateTable& t);

/// Reads the three input files and aligns y and covariates to the sample
/// order of x. Throws InputError when the sample id sets differ.
PairedDataset load_dataset(const std::filesystem::path& x_path, const std::filesystem::path& y_path,
                           const std::filesystem::path& covariates_path);
void save_dataset(const PairedDataset& data, const std::filesystem::path& x_path,
                  const std::filesystem::path& y_path,
                  const std::filesystem::path& covariates_path);

}  // namespace mwmv
