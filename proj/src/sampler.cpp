#include "mwmv/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mwmv/errors.hpp"

namespace mwmv {

const char* block_name(Block b) {
  switch (b) {
    case Block::clusters: return "clusters";
    case Block::resid_var: return "resid_var";
    case Block::location_scale: return "location_scale";
    case Block::latents: return "latents_fa";
    case Block::w: return "w";
    case Block::ard: return "ard";
    case Block::psi: return "psi";
    case Block::z: return "z";
    case Block::effects: return "effects";
  }
  return "unknown";
}

void SamplerConfig::set_only(std::initializer_list<Block> blocks) {
  enabled.fill(false);
  for (Block b : blocks) enabled[static_cast<size_t>(b)] = true;
}

void SamplerConfig::validate(const ModelLayout& layout) const {
  if (burn_in < 0) throw InputError("burn_in must be >= 0");
  if (n_samples < 1) throw InputError("n_samples must be >= 1");
  if (thin < 1) throw InputError("thin must be >= 1");
  if (warmup_sweeps < 0) throw InputError("warmup_sweeps must be >= 0");
  if (!frozen_dims.empty() && static_cast<int>(frozen_dims.size()) != layout.k_z())
    throw InputError("frozen_dims must have one entry per latent dimension");
  if (init == InitMode::supplied_state && !initial_state)
    throw InputError("init = supplied_state requires an initial state");
}

void update_z(ModelState& state, const PairedDataset& data, const ModelLayout& layout, Rng& rng,
              const FrozenDims& frozen) {
  const auto dims = free_dims(layout, frozen);
  if (dims.empty()) return;
  const MatrixXd draw = z_conditional(state, layout, data.covariates, frozen).sample(rng);
  for (size_t r = 0; r < dims.size(); ++r) state.z.col(dims[r]) = draw.col(static_cast<Eigen::Index>(r));
}

void update_effects(ModelState& state, const PairedDataset& data, const ModelLayout& layout,
                    const Hyperparameters& hypers, Rng& rng, const FrozenDims& frozen) {
  const auto dims = free_dims(layout, frozen);
  if (dims.empty() || layout.n_effects() == 0) return;
  const MatrixXd draw =
      effects_conditional(state, layout, data.covariates, hypers, frozen).sample(rng);
  for (size_t r = 0; r < dims.size(); ++r)
    state.effects.col(dims[r]) = draw.row(static_cast<Eigen::Index>(r)).transpose();
}

void update_effects_z_jointly(ModelState& state, const PairedDataset& data,
                              const ModelLayout& layout, const Hyperparameters& hypers, Rng& rng,
                              const FrozenDims& frozen) {
  const auto dims = free_dims(layout, frozen);
  if (dims.empty()) return;
  if (layout.n_effects() > 0) {
    const MatrixXd draw =
        effects_marginal_conditional(state, layout, data.covariates, hypers, frozen).sample(rng);
    const auto kf = static_cast<Eigen::Index>(dims.size());
    for (int e = 0; e < layout.n_effects(); ++e)
      for (size_t r = 0; r < dims.size(); ++r)
        state.effects(e, dims[r]) = draw(0, static_cast<Eigen::Index>(r) + kf * e);
  }
  update_z(state, data, layout, rng, frozen);
}

void update_latents_fa(ModelState& state, const PairedDataset& data, View v, Rng& rng) {
  state.view(v).lat = latents_conditional(state, data, v).sample(rng);
}

void update_w(ModelState& state, const ModelLayout& layout, View v, Rng& rng,
              const FrozenDims& frozen) {
  const WConditional cond = w_conditional(state, layout, v, frozen);
  if (cond.free.empty()) return;
  state.view(v).w = cond.sample(state.view(v).w, rng);
}

void update_ard(ModelState& state, const ModelLayout& layout, const Hyperparameters& hypers,
                Rng& rng, const FrozenDims& frozen) {
  for (View v : kViews) {
    const VectorXd draw = ard_conditional(state, layout, hypers, v).sample(rng);
    for (int l = 0; l < layout.k_z(); ++l)
      if (layout.active(v, l) && (frozen.empty() || !frozen[static_cast<size_t>(l)]))
        state.view(v).ard(l) = draw(l);
  }
}

void update_psi(ModelState& state, const ModelLayout& layout, const Hyperparameters& hypers,
                View v, Rng& rng) {
  state.view(v).psi = psi_conditional(state, layout, hypers, v).sample(rng);
}

void update_clusters(ModelState& state, const PairedDataset& data,
                     const Hyperparameters& hypers, View v, Rng& rng) {
  ViewState& vs = state.view(v);
  const MatrixXd& obs = data.view(v);
  const Eigen::Index k = vs.psi.rows();
  // Factor scores stay fixed during the sweep, so cross products are shared.
  const MatrixXd centered = obs.rowwise() - vs.mu.transpose();
  const MatrixXd cross = centered.transpose() * vs.lat;  // p x k
  const VectorXd energy = vs.lat.colwise().squaredNorm().transpose();
  VectorXd counts = VectorXd::Zero(k);
  for (int c : vs.clusters) counts(c) += 1.0;

  for (Eigen::Index i = 0; i < obs.cols(); ++i) {
    int& label = vs.clusters[static_cast<size_t>(i)];
    counts(label) -= 1.0;
    const VectorXd logp = cluster_log_weights(counts, cross.row(i).transpose(), energy,
                                              vs.scales(i), vs.resid_var(i),
                                              hypers.dirichlet_conc);
    label = rng.categorical_log(logp);
    counts(label) += 1.0;
  }
}

void update_resid_var(ModelState& state, const PairedDataset& data,
                      const Hyperparameters& hypers, View v, Rng& rng) {
  state.view(v).resid_var = resid_var_conditional(state, data, hypers, v).sample(rng);
}

void update_location_scale(ModelState& state, const PairedDataset& data,
                           const Hyperparameters& hypers, View v, Rng& rng) {
  if (!hypers.free_location_scale) return;
  auto [mu, scales] = location_scale_conditional(state, data, hypers, v).sample(rng);
  state.view(v).mu = std::move(mu);
  state.view(v).scales = std::move(scales);
}

namespace {

void require_finite(const ModelState& s, Block b, int sweep) {
  auto bad = [](const ModelState& st) -> std::string {
    for (View v : kViews) {
      const ViewState& vs = st.view(v);
      const std::string sfx = std::string("_") + view_name(v);
      if (!vs.scales.allFinite()) return "scales" + sfx;
      if (!vs.mu.allFinite()) return "mu" + sfx;
      if (!vs.w.allFinite()) return "w" + sfx;
      if (!vs.psi.allFinite()) return "psi" + sfx;
      if (!vs.lat.allFinite()) return v == View::x ? "xlat" : "ylat";
      if (!vs.resid_var.allFinite() || !(vs.resid_var.array() > 0.0).all()) return "resid_var" + sfx;
      if (!vs.ard.allFinite() || !(vs.ard.array() > 0.0).all()) return "ard" + sfx;
    }
    if (!st.z.allFinite()) return "z";
    if (!st.effects.allFinite()) return "effects";
    return {};
  };
  if (const std::string field = bad(s); !field.empty())
    throw NumericalError("invalid " + field + " after block " + std::string(block_name(b)) +
                         " in sweep " + std::to_string(sweep));
}

template <typename F>
void run_block(ModelState& s, Block b, int sweep, F&& f) {
  try {
    f();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " (block " + block_name(b) + ", sweep " +
                         std::to_string(sweep) + ")");
  }
  require_finite(s, b, sweep);
}

}  // namespace

void gibbs_sweep(ModelState& state, const PairedDataset& data, const ModelLayout& layout,
                 const Hyperparameters& hypers, const SamplerConfig& config, Rng& rng,
                 int sweep_index) {
  const FrozenDims& frozen = config.frozen_dims;
  auto step = [&](Block b, auto&& f) {
    if (config.is_enabled(b)) run_block(state, b, sweep_index, f);
  };
  step(Block::clusters, [&] {
    for (View v : kViews) update_clusters(state, data, hypers, v, rng);
  });
  step(Block::resid_var, [&] {
    for (View v : kViews) update_resid_var(state, data, hypers, v, rng);
  });
  step(Block::location_scale, [&] {
    for (View v : kViews) update_location_scale(state, data, hypers, v, rng);
  });
  step(Block::latents, [&] {
    for (View v : kViews) update_latents_fa(state, data, v, rng);
  });
  step(Block::w, [&] {
    for (View v : kViews) update_w(state, layout, v, rng, frozen);
  });
  step(Block::ard, [&] { update_ard(state, layout, hypers, rng, frozen); });
  step(Block::psi, [&] {
    for (View v : kViews) update_psi(state, layout, hypers, v, rng);
  });
  step(Block::z, [&] { update_z(state, data, layout, rng, frozen); });
  step(Block::effects, [&] { update_effects(state, data, layout, hypers, rng, frozen); });
  if (config.joint_effects_z && config.is_enabled(Block::z) && config.is_enabled(Block::effects))
    run_block(state, Block::effects, sweep_index,
              [&] { update_effects_z_jointly(state, data, layout, hypers, rng, frozen); });
}

std::vector<int> agglomerative_clusters(const MatrixXd& data, int k) {
  const auto p = static_cast<int>(data.cols());
  if (k < 1 || k > p) throw DesignError("agglomerative grouping: invalid cluster count");
  // Squared Euclidean distance between centered columns. With unit loadings a
  // variable is its cluster latent plus noise, so same-cluster pairs differ by
  // noise only. Correlation distance misgroups clusters of low latent variance.
  const MatrixXd c = data.rowwise() - data.colwise().mean();
  const VectorXd sq = c.colwise().squaredNorm();
  const MatrixXd gram = c.transpose() * c;
  std::vector<std::vector<int>> groups(static_cast<size_t>(p));
  for (int i = 0; i < p; ++i) groups[static_cast<size_t>(i)] = {i};
  // Sum of pairwise distances between live groups; average = sum / (|A||B|).
  MatrixXd dist_sum = (-2.0 * gram).colwise() + sq;
  dist_sum.rowwise() += sq.transpose();
  std::vector<bool> live(static_cast<size_t>(p), true);
  int n_live = p;
  while (n_live > k) {
    double best = std::numeric_limits<double>::infinity();
    int ba = -1, bb = -1;
    for (int a = 0; a < p; ++a) {
      if (!live[static_cast<size_t>(a)]) continue;
      for (int b = a + 1; b < p; ++b) {
        if (!live[static_cast<size_t>(b)]) continue;
        const double avg = dist_sum(a, b) / static_cast<double>(groups[static_cast<size_t>(a)].size() *
                                                                 groups[static_cast<size_t>(b)].size());
        if (avg < best) {
          best = avg;
          ba = a;
          bb = b;
        }
      }
    }
    auto& ga = groups[static_cast<size_t>(ba)];
    auto& gb = groups[static_cast<size_t>(bb)];
    ga.insert(ga.end(), gb.begin(), gb.end());
    gb.clear();
    live[static_cast<size_t>(bb)] = false;
    for (int c = 0; c < p; ++c) {
      dist_sum(ba, c) += dist_sum(bb, c);
      dist_sum(c, ba) = dist_sum(ba, c);
    }
    --n_live;
  }
  std::vector<int> labels(static_cast<size_t>(p), 0);
  int next = 0;
  for (int a = 0; a < p; ++a) {
    if (!live[static_cast<size_t>(a)]) continue;
    for (int i : groups[static_cast<size_t>(a)]) labels[static_cast<size_t>(i)] = next;
    ++next;
  }
  return labels;
}

ModelState initial_state(const PairedDataset& data, const ModelLayout& layout,
                         const Hyperparameters& hypers, const SamplerConfig& config, Rng& rng) {
  if (config.init == InitMode::supplied_state) {
    ModelState s = *config.initial_state;
    s.check_consistent(layout, data.n(), data.x.cols(), data.y.cols());
    return s;
  }
  ModelState s =
      sample_prior_state(layout, hypers, data.covariates, data.x.cols(), data.y.cols(), rng);
  // Vague priors can put variance draws at numerically useless extremes.
  for (View v : kViews) {
    ViewState& vs = s.view(v);
    for (int d = 0; d < layout.k_z(); ++d)
      if (layout.active(v, d)) vs.ard(d) = std::clamp(vs.ard(d), 1e-2, 1e2);
    vs.resid_var = vs.resid_var.cwiseMax(1e-2).cwiseMin(1e2);
    for (int d = 0; d < layout.k_z(); ++d) {
      if (!layout.active(v, d)) continue;
      for (Eigen::Index r = 0; r < vs.w.rows(); ++r) vs.w(r, d) = std::sqrt(vs.ard(d)) * rng.normal();
    }
    if (config.agglomerative_init) {
      vs.clusters = agglomerative_clusters(data.view(v), layout.k_clusters(v));
      // Factor scores from the group means, residual variances from what they
      // leave unexplained. Starting them from the prior instead can stall the
      // warm-up: a large residual variance keeps the scores uninformative.
      const MatrixXd& obs = data.view(v);
      MatrixXd sums = MatrixXd::Zero(obs.rows(), layout.k_clusters(v));
      VectorXd counts = VectorXd::Zero(layout.k_clusters(v));
      for (Eigen::Index i = 0; i < obs.cols(); ++i) {
        const int c = vs.clusters[static_cast<size_t>(i)];
        sums.col(c) += ((obs.col(i).array() - vs.mu(i)) / vs.scales(i)).matrix();
        counts(c) += 1.0;
      }
      for (int c = 0; c < layout.k_clusters(v); ++c)
        if (counts(c) > 0.0) vs.lat.col(c) = sums.col(c) / counts(c);
      for (Eigen::Index i = 0; i < obs.cols(); ++i) {
        const int c = vs.clusters[static_cast<size_t>(i)];
        const double ms = ((obs.col(i).array() - vs.mu(i)).matrix() - vs.scales(i) * vs.lat.col(c))
                              .squaredNorm() / static_cast<double>(obs.rows());
        vs.resid_var(i) = std::clamp(ms, 1e-2, 1e2);
      }
    }
  }
  // Otherwise start the factor scores from their data-informed conditional.
  if (!config.agglomerative_init)
    for (View v : kViews)
      if (config.is_enabled(Block::latents)) update_latents_fa(s, data, v, rng);
  return s;
}

PosteriorChain gibbs_run(const PairedDataset& data, const ModelLayout& layout,
                         const Hyperparameters& hypers, const SamplerConfig& config) {
  layout.validate_against(data);
  hypers.validate(layout);
  config.validate(layout);
  int free_shared = 0;
  for (int d = 0; d < layout.k_shared; ++d)
    if (config.frozen_dims.empty() || !config.frozen_dims[static_cast<size_t>(d)]) ++free_shared;
  if (free_shared > 1)
    throw DesignError("only one shared dimension can be sampled per run; add further shared "
                      "components with deflation");

  Rng rng(config.seed);
  PosteriorChain chain;
  chain.config = config;
  chain.config.initial_state.reset();
  chain.layout = layout;
  chain.hypers = hypers;
  chain.sign_flips.assign(static_cast<size_t>(layout.k_z()), 1);
  chain.states.reserve(static_cast<size_t>(config.n_samples));

  ModelState state = initial_state(data, layout, hypers, config, rng);
  // A grouped start is only useful if the continuous blocks settle before the
  // assignments may move, so the first burn-in sweeps hold them fixed.
  SamplerConfig warmup = config;
  warmup.enabled[static_cast<size_t>(Block::clusters)] = false;
  const bool hold = config.agglomerative_init && config.init == InitMode::from_prior;
  const int held = hold ? std::min(config.burn_in, config.warmup_sweeps) : 0;
  const int total = config.burn_in + config.n_samples * config.thin;
  for (int sweep = 1; sweep <= total; ++sweep) {
    gibbs_sweep(state, data, layout, hypers, sweep <= held ? warmup : config, rng, sweep);
    if (sweep > config.burn_in && (sweep - config.burn_in) % config.thin == 0)
      chain.states.push_back(state);
  }
  return chain;
}

namespace {

void flip_dimension(ModelState& s, const ModelLayout& layout, int d) {
  s.z.col(d) *= -1.0;
  s.effects.col(d) *= -1.0;
  for (View v : kViews)
    if (layout.active(v, d)) s.view(v).w.col(d) *= -1.0;
}

VectorXd sign_features(const ModelState& s, int d) {
  VectorXd f(s.x.w.rows() + s.y.w.rows() + s.effects.rows());
  f << s.x.w.col(d), s.y.w.col(d), s.effects.col(d);
  return f;
}

}  // namespace

PosteriorChain sign_fix(PosteriorChain chain, const std::optional<std::string>& anchor) {
  if (chain.states.empty()) return chain;
  const ModelLayout& layout = chain.layout;
  const int kz = layout.k_z();
  int anchor_row = -1;
  if (anchor) {
    anchor_row = layout.effect_index(*anchor);
    if (anchor_row < 0) throw InputError("unknown anchor effect: " + *anchor);
  }
  MatrixXd mean = MatrixXd::Zero(layout.n_effects(), kz);
  for (const auto& s : chain.states) mean += s.effects;
  mean /= static_cast<double>(chain.states.size());

  if (chain.sign_flips.size() != static_cast<size_t>(kz)) chain.sign_flips.assign(static_cast<size_t>(kz), 1);
  for (int d = 0; d < kz; ++d) {
    if (mean.rows() == 0) break;
    Eigen::Index row = anchor_row;
    if (row < 0) mean.col(d).cwiseAbs().maxCoeff(&row);
    if (!(mean(row, d) < 0.0)) continue;
    for (auto& s : chain.states) flip_dimension(s, layout, d);
    chain.sign_flips[static_cast<size_t>(d)] *= -1;
  }
  return chain;
}

void align_dimension_signs(std::vector<ModelState>& states, const ModelLayout& layout, int d) {
  if (states.empty()) return;
  VectorXd reference = sign_features(states.front(), d);
  for (int iter = 0; iter < 20; ++iter) {
    bool changed = false;
    VectorXd next = VectorXd::Zero(reference.size());
    for (auto& s : states) {
      if (sign_features(s, d).dot(reference) < 0.0) {
        flip_dimension(s, layout, d);
        changed = true;
      }
      next += sign_features(s, d);
    }
    reference = next;
    if (!changed && iter > 0) break;
  }
}

ModelLayout extend_shared(const ModelLayout& layout) {
  ModelLayout out = layout;
  ++out.k_shared;
  return out;
}

ModelState embed_state(const ModelState& state, const ModelLayout& from, const ModelLayout& to) {
  if (to != extend_shared(from)) throw DesignError("layout is not a one-dimension shared extension");
  const int kz = to.k_z();
  const int inserted = from.k_shared;
  auto map_cols = [&](const MatrixXd& m) {
    MatrixXd out = MatrixXd::Zero(m.rows(), kz);
    for (int d = 0; d < from.k_z(); ++d) out.col(d < inserted ? d : d + 1) = m.col(d);
    return out;
  };
  ModelState out = state;
  out.z = map_cols(state.z);
  out.effects = map_cols(state.effects);
  for (View v : kViews) {
    ViewState& vs = out.view(v);
    vs.w = map_cols(state.view(v).w);
    VectorXd ard = VectorXd::Ones(kz);
    for (int d = 0; d < from.k_z(); ++d) ard(d < inserted ? d : d + 1) = state.view(v).ard(d);
    vs.ard = ard;
  }
  return out;
}

PosteriorChain deflate_add_component(const PosteriorChain& chain, const PairedDataset& data,
                                     const ModelLayout& extended, const SamplerConfig& config) {
  if (extended != extend_shared(chain.layout))
    throw DesignError("deflation layout must add exactly one shared dimension");
  const int inserted = chain.layout.k_shared;
  const int kz = extended.k_z();

  PosteriorChain out;
  out.layout = extended;
  out.hypers = chain.hypers;
  out.config = config;
  out.config.initial_state.reset();
  out.sign_flips.assign(static_cast<size_t>(kz), 1);
  for (int d = 0; d < chain.layout.k_z(); ++d)
    out.sign_flips[static_cast<size_t>(d < inserted ? d : d + 1)] =
        chain.sign_flips.empty() ? 1 : chain.sign_flips[static_cast<size_t>(d)];

  SamplerConfig sub = config;
  sub.n_samples = 1;
  sub.thin = 1;
  sub.init = InitMode::supplied_state;
  // Only the earlier shared components are held; the view-specific ones are
  // resampled so that signal they absorbed can move to the new component.
  sub.frozen_dims.assign(static_cast<size_t>(kz), false);
  for (int d = 0; d < inserted; ++d) sub.frozen_dims[static_cast<size_t>(d)] = true;

  Rng seeds(config.seed);
  out.states.reserve(chain.states.size());
  for (const auto& state : chain.states) {
    Rng rng(seeds.next_seed());
    ModelState start = embed_state(state, chain.layout, extended);
    // Start the new dimension from the leading singular pair of the residual
    // cross-covariance of the factor scores, which is what a further shared
    // component has to explain. A random start tends to let the ARD variance
    // collapse before the component is found.
    const MatrixXd rx = start.x.lat - start.z * start.x.w.transpose();
    const MatrixXd ry = start.y.lat - start.z * start.y.w.transpose();
    const MatrixXd cross = rx.transpose() * ry / static_cast<double>(rx.rows());
    const Eigen::JacobiSVD<MatrixXd> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double root = std::sqrt(std::max(svd.singularValues()(0), 1e-6));
    start.x.w.col(inserted) = svd.matrixU().col(0) * root;
    start.y.w.col(inserted) = svd.matrixV().col(0) * root;
    for (View v : kViews) start.view(v).ard(inserted) = std::max(root * root, 1e-2);
    start.z.col(inserted) = 0.5 * (rx * svd.matrixU().col(0) + ry * svd.matrixV().col(0)) / root;
    start.effects.col(inserted).setZero();
    sub.seed = rng.next_seed();
    sub.initial_state = std::move(start);
    PosteriorChain short_chain = gibbs_run(data, extended, chain.hypers, sub);
    out.states.push_back(std::move(short_chain.states.back()));
  }
  // Every short chain settles on its own sign for the new dimension.
  align_dimension_signs(out.states, extended, inserted);
  return out;
}

}  // namespace mwmv
