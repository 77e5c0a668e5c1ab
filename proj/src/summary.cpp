#include "mwmv/summary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "mwmv/csv.hpp"
#include "mwmv/errors.hpp"

namespace mwmv {

double quantile(std::span<const double> values, double level) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = level * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<EffectSummary> summarize_effects(const PosteriorChain& chain, bool mirror) {
  if (chain.states.empty()) throw std::invalid_argument("empty chain");
  const ModelLayout& layout = chain.layout;
  std::vector<EffectSummary> out;
  std::vector<double> trace(chain.states.size());
  for (int e = 0; e < layout.n_effects(); ++e) {
    for (int d = 0; d < layout.k_z(); ++d) {
      double sum = 0.0;
      for (size_t t = 0; t < chain.states.size(); ++t) {
        trace[t] = chain.states[t].effects(e, d);
        sum += trace[t];
      }
      EffectSummary s;
      s.effect = layout.effect_name(e);
      s.dim = d;
      s.dimension = layout.dimension_name(d);
      s.mean = sum / static_cast<double>(trace.size());
      if (mirror && s.mean < 0.0) {
        for (double& t : trace) t = -t;
        s.mean = -s.mean;
      }
      for (int q = 0; q < 5; ++q) s.q[q] = quantile(trace, kQuantileLevels[q]);
      s.found = s.q[0] > 0.0 || s.q[4] < 0.0;
      out.push_back(s);
    }
  }
  return out;
}

const EffectSummary& find_summary(const std::vector<EffectSummary>& rows,
                                  const std::string& effect, int dim) {
  for (const auto& r : rows)
    if (r.effect == effect && r.dim == dim) return r;
  throw std::out_of_range("no summary for " + effect);
}

MatrixXd co_occurrence(const PosteriorChain& chain, View v) {
  if (chain.states.empty()) throw std::invalid_argument("empty chain");
  const auto p = static_cast<Eigen::Index>(chain.states.front().view(v).clusters.size());
  MatrixXd c = MatrixXd::Zero(p, p);
  for (const auto& s : chain.states) {
    const auto& cl = s.view(v).clusters;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = i; j < p; ++j)
        if (cl[static_cast<size_t>(i)] == cl[static_cast<size_t>(j)]) c(i, j) += 1.0;
  }
  c /= static_cast<double>(chain.states.size());
  c.triangularView<Eigen::StrictlyLower>() = c.transpose().triangularView<Eigen::StrictlyLower>();
  return c;
}

namespace {

std::vector<int> relabel(const std::vector<int>& labels) {
  std::map<int, int> seen;
  std::vector<int> out(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    auto it = seen.try_emplace(labels[i], static_cast<int>(seen.size())).first;
    out[i] = it->second;
  }
  return out;
}

double choose2(double n) { return 0.5 * n * (n - 1.0); }

}  // namespace

std::vector<int> point_partition(const PosteriorChain& chain, View v) {
  const MatrixXd c = co_occurrence(chain, v);
  const Eigen::Index p = c.rows();
  double best = std::numeric_limits<double>::infinity();
  size_t best_t = 0;
  for (size_t t = 0; t < chain.states.size(); ++t) {
    const auto& cl = chain.states[t].view(v).clusters;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = i + 1; j < p; ++j) {
        const double d =
            (cl[static_cast<size_t>(i)] == cl[static_cast<size_t>(j)] ? 1.0 : 0.0) - c(i, j);
        loss += d * d;
      }
    if (loss < best) {
      best = loss;
      best_t = t;
    }
  }
  return relabel(chain.states[best_t].view(v).clusters);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("partitions differ in length");
  const auto ra = relabel(a), rb = relabel(b);
  const int ka = *std::max_element(ra.begin(), ra.end()) + 1;
  const int kb = *std::max_element(rb.begin(), rb.end()) + 1;
  MatrixXd table = MatrixXd::Zero(ka, kb);
  for (size_t i = 0; i < ra.size(); ++i) table(ra[i], rb[i]) += 1.0;
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) index += choose2(table(i, j));
  for (int i = 0; i < ka; ++i) sum_a += choose2(table.row(i).sum());
  for (int j = 0; j < kb; ++j) sum_b += choose2(table.col(j).sum());
  const double expected = sum_a * sum_b / choose2(static_cast<double>(ra.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::vector<DimensionTrace> traceback(const PosteriorChain& chain,
                                      const std::vector<std::string>& names_x,
                                      const std::vector<std::string>& names_y, int top_clusters,
                                      double threshold) {
  const ModelLayout& layout = chain.layout;
  std::vector<DimensionTrace> out;
  for (View v : kViews) {
    const auto& names = v == View::x ? names_x : names_y;
    const std::vector<int> part = point_partition(chain, v);
    const MatrixXd co = co_occurrence(chain, v);
    const auto p = static_cast<Eigen::Index>(part.size());
    if (static_cast<Eigen::Index>(names.size()) != p)
      throw InputError("variable names do not match the chain");
    const int k = *std::max_element(part.begin(), part.end()) + 1;

    // Posterior mean loading of every variable on every latent dimension.
    MatrixXd loading = MatrixXd::Zero(p, layout.k_z());
    for (const auto& s : chain.states) {
      const ViewState& vs = s.view(v);
      for (Eigen::Index i = 0; i < p; ++i)
        loading.row(i) += vs.scales(i) * vs.w.row(vs.clusters[static_cast<size_t>(i)]);
    }
    loading /= static_cast<double>(chain.states.size());

    for (int d = 0; d < layout.k_z(); ++d) {
      if (!layout.active(v, d)) continue;
      DimensionTrace trace;
      trace.dim = d;
      trace.dimension = layout.dimension_name(d);
      trace.view = v;
      std::vector<TracedCluster> clusters;
      for (int c = 0; c < k; ++c) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < p; ++i)
          if (part[static_cast<size_t>(i)] == c) rows.push_back(i);
        TracedCluster tc;
        tc.cluster = c;
        for (auto i : rows) tc.loading += loading(i, d);
        tc.loading /= static_cast<double>(rows.size());
        for (auto i : rows) {
          double mean_co = 0.0;
          for (auto j : rows) mean_co += co(i, j);
          if (mean_co / static_cast<double>(rows.size()) >= threshold)
            tc.members.push_back(names[static_cast<size_t>(i)]);
        }
        clusters.push_back(std::move(tc));
      }
      std::stable_sort(clusters.begin(), clusters.end(), [](const auto& l, const auto& r) {
        return std::abs(l.loading) > std::abs(r.loading);
      });
      if (static_cast<int>(clusters.size()) > top_clusters) clusters.resize(top_clusters);
      trace.clusters = std::move(clusters);
      out.push_back(std::move(trace));
    }
  }
  return out;
}

EffectReport make_report(const PosteriorChain& chain, const std::vector<std::string>& names_x,
                         const std::vector<std::string>& names_y) {
  return EffectReport{summarize_effects(chain), traceback(chain, names_x, names_y)};
}

Json to_json(const EffectReport& report) {
  Json effects = Json::array();
  for (const auto& s : report.effects) {
    Json q = Json::object();
    q["q2.5"] = s.q[0];
    q["q25"] = s.q[1];
    q["q50"] = s.q[2];
    q["q75"] = s.q[3];
    q["q97.5"] = s.q[4];
    effects.push_back(
        {{"effect", s.effect}, {"dimension", s.dimension}, {"mean", s.mean}, {"quantiles", q},
         {"found", s.found}});
  }
  Json traces = Json::array();
  for (const auto& t : report.traces) {
    Json clusters = Json::array();
    for (const auto& c : t.clusters)
      clusters.push_back({{"cluster", c.cluster + 1}, {"loading", c.loading}, {"members", c.members}});
    traces.push_back({{"dimension", t.dimension}, {"view", view_name(t.view)}, {"clusters", clusters}});
  }
  return Json{{"effects", effects}, {"traceback", traces}};
}

void write_quantile_csv(const std::filesystem::path& path,
                        const std::vector<EffectSummary>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "effect,dimension,mean,q2.5,q25,q50,q75,q97.5,found\n";
  for (const auto& s : rows) {
    out << s.effect << ',' << s.dimension << ',' << format_double(s.mean);
    for (double q : s.q) out << ',' << format_double(q);
    out << ',' << (s.found ? 1 : 0) << '\n';
  }
}

}  // namespace mwmv
