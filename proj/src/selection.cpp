#include "mwmv/selection.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "mwmv/csv.hpp"
#include "mwmv/errors.hpp"

namespace mwmv {

void SelectionGrid::validate(Eigen::Index n) const {
  if (cluster_counts_x.empty() || cluster_counts_y.empty())
    throw InputError("selection grid is empty");
  for (int k : cluster_counts_x)
    if (k < 1) throw InputError("cluster counts must be at least 1");
  for (int k : cluster_counts_y)
    if (k < 1) throw InputError("cluster counts must be at least 1");
  if (folds < 2 || folds > n) throw InputError("folds must be between 2 and the sample count");
  if (threads < 1) throw InputError("threads must be at least 1");
  if (!(tie_se >= 0.0)) throw InputError("tie_se must be non-negative");
}

std::vector<int> stratified_folds(const std::vector<Cell>& design, int folds, std::uint64_t seed) {
  std::map<Cell, std::vector<int>> cells;
  for (size_t j = 0; j < design.size(); ++j) cells[design[j]].push_back(static_cast<int>(j));
  std::mt19937_64 engine(seed);
  std::vector<int> out(design.size(), -1);
  int next = 0;
  for (auto& [cell, members] : cells) {
    if (members.size() < 2)
      throw DesignError("covariate cell (" + std::to_string(cell.a) + "," + std::to_string(cell.b) +
                        ") has fewer than 2 samples; cannot build folds");
    std::shuffle(members.begin(), members.end(), engine);
    for (int j : members) {
      out[static_cast<size_t>(j)] = next;
      next = (next + 1) % folds;
    }
  }
  return out;
}

std::vector<MarginalLogDensity> predictive_log_density(const PosteriorChain& chain,
                                                       const PairedDataset& heldout) {
  const auto n = static_cast<size_t>(heldout.n());
  const size_t s_count = chain.states.size();
  if (s_count == 0) throw InputError("empty chain");
  std::vector<std::vector<double>> joint(n), x(n), y(n);
  for (const auto& state : chain.states) {
    const MarginalScorer scorer(state, chain.layout);
    for (size_t j = 0; j < n; ++j) {
      const auto ji = static_cast<Eigen::Index>(j);
      const MarginalLogDensity d = scorer.score(heldout.x.row(ji).transpose(),
                                                heldout.y.row(ji).transpose(),
                                                heldout.covariates[j]);
      joint[j].push_back(d.joint);
      x[j].push_back(d.x);
      y[j].push_back(d.y);
    }
  }
  auto log_mean_exp = [&](const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    double acc = 0.0;
    for (double t : v) acc += std::exp(t - m);
    return m + std::log(acc / static_cast<double>(v.size()));
  };
  std::vector<MarginalLogDensity> out(n);
  for (size_t j = 0; j < n; ++j)
    out[j] = {log_mean_exp(joint[j]), log_mean_exp(x[j]), log_mean_exp(y[j])};
  return out;
}

namespace {

struct Task {
  int kx = 0;
  int ky = 0;
  int fold = 0;
};

FoldScore run_task(const PairedDataset& data, const std::vector<int>& fold_of, const Task& t,
                   const SelectionGrid& grid, const Hyperparameters& hypers,
                   const ModelLayout& layout_template) {
  std::vector<int> train, test;
  for (size_t j = 0; j < fold_of.size(); ++j)
    (fold_of[j] == t.fold ? test : train).push_back(static_cast<int>(j));
  const PairedDataset training = data.subset(train);
  const PairedDataset heldout = data.subset(test);
  ModelLayout layout = layout_template;
  layout.k_clusters_x = t.kx;
  layout.k_clusters_y = t.ky;
  const PosteriorChain chain = gibbs_run(training, layout, hypers, grid.config);
  const auto dens = predictive_log_density(chain, heldout);
  FoldScore s;
  s.k_clusters_x = t.kx;
  s.k_clusters_y = t.ky;
  s.fold = t.fold;
  s.n_heldout = static_cast<int>(test.size());
  for (const auto& d : dens) {
    s.heldout_loglik += d.joint;
    s.loglik_x += d.x;
    s.loglik_y += d.y;
  }
  s.heldout_loglik /= s.n_heldout;
  s.loglik_x /= s.n_heldout;
  s.loglik_y /= s.n_heldout;
  return s;
}

}  // namespace

SelectionResult cv_select(const PairedDataset& data, const SelectionGrid& grid,
                          const Hyperparameters& hypers, const ModelLayout& layout_template) {
  grid.validate(data.n());
  const std::vector<int> fold_of = stratified_folds(data.covariates, grid.folds, grid.config.seed);

  std::vector<std::pair<int, int>> configs;
  if (grid.mode == GridMode::product) {
    for (int kx : grid.cluster_counts_x)
      for (int ky : grid.cluster_counts_y) configs.emplace_back(kx, ky);
  } else {
    std::vector<int> ks = grid.cluster_counts_x;
    ks.insert(ks.end(), grid.cluster_counts_y.begin(), grid.cluster_counts_y.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (int k : ks) configs.emplace_back(k, k);
  }
  for (const auto& [kx, ky] : configs) {
    ModelLayout l = layout_template;
    l.k_clusters_x = kx;
    l.k_clusters_y = ky;
    l.validate_against(data);
  }
  std::vector<Task> tasks;
  for (const auto& [kx, ky] : configs)
    for (int f = 0; f < grid.folds; ++f) tasks.push_back({kx, ky, f});

  std::vector<FoldScore> table(tasks.size());
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (size_t i = next++; i < tasks.size(); i = next++) {
      try {
        table[i] = run_task(data, fold_of, tasks[i], grid, hypers, layout_template);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(grid.threads, static_cast<int>(tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Per-fold sums of held-out log densities, per configuration and term.
  enum Term { joint, x_term, y_term };
  std::map<std::pair<int, int>, std::vector<std::array<double, 3>>> sums;
  for (const auto& c : configs)
    sums[c].assign(static_cast<size_t>(grid.folds), {0.0, 0.0, 0.0});
  for (const auto& s : table) {
    auto& f = sums[{s.k_clusters_x, s.k_clusters_y}][static_cast<size_t>(s.fold)];
    f[joint] = s.heldout_loglik * s.n_heldout;
    f[x_term] = s.loglik_x * s.n_heldout;
    f[y_term] = s.loglik_y * s.n_heldout;
  }
  const double n = static_cast<double>(data.n());
  auto total = [&](const std::pair<int, int>& c, Term t) {
    double acc = 0.0;
    for (const auto& f : sums[c]) acc += f[t];
    return acc;
  };
  // Standard error of the summed paired fold differences between two configs.
  auto diff_se = [&](const std::pair<int, int>& a, const std::pair<int, int>& b, Term t) {
    std::vector<double> d;
    for (size_t f = 0; f < sums[a].size(); ++f) d.push_back(sums[a][f][t] - sums[b][f][t]);
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(d.size() - 1) * static_cast<double>(d.size()));
  };

  SelectionResult result;
  result.table = std::move(table);
  // Configurations from the fewest clusters upwards; the first one within
  // tie_se standard errors of the best is chosen.
  auto sorted = configs;
  std::sort(sorted.begin(), sorted.end(), [](const auto& l, const auto& r) {
    return std::pair(l.first + l.second, l.first) < std::pair(r.first + r.second, r.first);
  });
  auto choose = [&](const std::vector<std::pair<int, int>>& candidates, Term t) {
    std::pair<int, int> best = candidates.front();
    for (const auto& c : candidates)
      if (total(c, t) > total(best, t)) best = c;
    for (const auto& c : candidates)
      if (total(c, t) >= total(best, t) - grid.tie_se * diff_se(c, best, t)) return c;
    return best;
  };
  if (grid.mode == GridMode::product) {
    const auto c = choose(sorted, joint);
    result.k_clusters_x = c.first;
    result.k_clusters_y = c.second;
    result.score = total(c, joint) / n;
  } else {
    std::vector<std::pair<int, int>> for_x, for_y;
    for (const auto& c : sorted) {
      if (std::find(grid.cluster_counts_x.begin(), grid.cluster_counts_x.end(), c.first) !=
          grid.cluster_counts_x.end())
        for_x.push_back(c);
      if (std::find(grid.cluster_counts_y.begin(), grid.cluster_counts_y.end(), c.second) !=
          grid.cluster_counts_y.end())
        for_y.push_back(c);
    }
    const auto cx = choose(for_x, x_term);
    const auto cy = choose(for_y, y_term);
    result.k_clusters_x = cx.first;
    result.k_clusters_y = cy.second;
    result.score = (total(cx, x_term) + total(cy, y_term)) / n;
  }
  return result;
}

void write_score_csv(const std::filesystem::path& path, const std::vector<FoldScore>& table) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "k_clusters_x,k_clusters_y,fold,heldout_loglik,loglik_x,loglik_y,n_heldout\n";
  for (const auto& s : table)
    out << s.k_clusters_x << ',' << s.k_clusters_y << ',' << s.fold + 1 << ','
        << format_double(s.heldout_loglik) << ',' << format_double(s.loglik_x) << ','
        << format_double(s.loglik_y) << ',' << s.n_heldout << '\n';
}

}  // namespace mwmv
