#include "mwmv/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mwmv/errors.hpp"

namespace mwmv {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  std::string t = text;
  while (!t.empty() && (t.back() == ' ' || t.back() == '\r')) t.pop_back();
  size_t start = 0;
  while (start < t.size() && t[start] == ' ') ++start;
  if (start < t.size() && t[start] == '+') ++start;
  double v = 0.0;
  const char* first = t.data() + start;
  const char* last = t.data() + t.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw InputError("not a number: '" + text + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

namespace {

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw InputError(path.string() + " is empty");
  return rows;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

LabeledMatrix read_matrix_csv(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  LabeledMatrix m;
  m.col_names.assign(rows[0].begin() + 1, rows[0].end());
  const auto p = static_cast<Eigen::Index>(m.col_names.size());
  m.values.resize(static_cast<Eigen::Index>(rows.size() - 1), p);
  for (size_t r = 1; r < rows.size(); ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != p + 1)
      throw InputError(path.string() + ": row " + std::to_string(r + 1) + " has " +
                       std::to_string(rows[r].size()) + " fields, expected " +
                       std::to_string(p + 1));
    m.row_ids.push_back(rows[r][0]);
    for (Eigen::Index c = 0; c < p; ++c) {
      const double v = parse_double(rows[r][static_cast<size_t>(c + 1)]);
      if (!std::isfinite(v))
        throw InputError(path.string() + ": non-finite value in row " + std::to_string(r + 1));
      m.values(static_cast<Eigen::Index>(r - 1), c) = v;
    }
  }
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const LabeledMatrix& m) {
  auto out = open_out(path);
  out << "sample_id";
  for (const auto& n : m.col_names) out << ',' << quote(n);
  out << '\n';
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    out << quote(m.row_ids[static_cast<size_t>(r)]);
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) out << ',' << format_double(m.values(r, c));
    out << '\n';
  }
}

CovariateTable read_covariates_csv(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  CovariateTable t;
  for (size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 3)
      throw InputError(path.string() + ": expected columns sample_id,a,b in row " +
                       std::to_string(r + 1));
    auto level = [&](const std::string& s) {
      const double v = parse_double(s);
      if (v != std::floor(v) || v < 0) throw InputError(path.string() + ": invalid covariate level '" + s + "'");
      return static_cast<int>(v);
    };
    t.sample_ids.push_back(rows[r][0]);
    t.cells.push_back({level(rows[r][1]), level(rows[r][2])});
  }
  return t;
}

void write_covariates_csv(const std::filesystem::path& path, const CovariateTable& t) {
  auto out = open_out(path);
  out << "sample_id,a,b\n";
  for (size_t j = 0; j < t.cells.size(); ++j)
    out << quote(t.sample_ids[j]) << ',' << t.cells[j].a << ',' << t.cells[j].b << '\n';
}

PairedDataset load_dataset(const std::filesystem::path& x_path, const std::filesystem::path& y_path,
                           const std::filesystem::path& covariates_path) {
  const LabeledMatrix x = read_matrix_csv(x_path);
  const LabeledMatrix y = read_matrix_csv(y_path);
  const CovariateTable cov = read_covariates_csv(covariates_path);

  std::map<std::string, int> y_index, cov_index;
  for (size_t j = 0; j < y.row_ids.size(); ++j)
    if (!y_index.emplace(y.row_ids[j], static_cast<int>(j)).second)
      throw InputError("duplicate sample id in y view: " + y.row_ids[j]);
  for (size_t j = 0; j < cov.sample_ids.size(); ++j)
    if (!cov_index.emplace(cov.sample_ids[j], static_cast<int>(j)).second)
      throw InputError("duplicate sample id in covariates: " + cov.sample_ids[j]);
  if (x.row_ids.size() != y.row_ids.size() || x.row_ids.size() != cov.sample_ids.size())
    throw InputError("misaligned sample ids: files have different sample counts");

  PairedDataset d;
  d.x = x.values;
  d.variable_names_x = x.col_names;
  d.variable_names_y = y.col_names;
  d.sample_ids = x.row_ids;
  std::vector<int> y_rows;
  for (const auto& id : x.row_ids) {
    const auto yi = y_index.find(id);
    const auto ci = cov_index.find(id);
    if (yi == y_index.end() || ci == cov_index.end())
      throw InputError("misaligned sample ids: '" + id + "' missing from y view or covariates");
    y_rows.push_back(yi->second);
    d.covariates.push_back(cov.cells[static_cast<size_t>(ci->second)]);
  }
  d.y = y.values(y_rows, Eigen::all);
  return d;
}

void save_dataset(const PairedDataset& data, const std::filesystem::path& x_path,
                  const std::filesystem::path& y_path,
                  const std::filesystem::path& covariates_path) {
  write_matrix_csv(x_path, {data.sample_ids, data.variable_names_x, data.x});
  write_matrix_csv(y_path, {data.sample_ids, data.variable_names_y, data.y});
  write_covariates_csv(covariates_path, {data.sample_ids, data.covariates});
}

}  // namespace mwmv
