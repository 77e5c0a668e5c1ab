#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "commands.hpp"
#include "mwmv/errors.hpp"

using namespace mwmv;

namespace {

struct Options {
  std::string x, y, covariates, config, out = ".", chain, grid, kind = "recovery";
  std::optional<std::uint64_t> seed;
  std::optional<int> burn_in, samples, clusters_x, clusters_y, n;
};

void add_data(CLI::App* cmd, Options& o) {
  cmd->add_option("--x", o.x, "x-view CSV (samples x variables)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--y", o.y, "y-view CSV (samples x variables)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--covariates", o.covariates, "covariate CSV (sample_id,a,b)")
      ->required()
      ->check(CLI::ExistingFile);
}

void add_sampler(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "sampler seed");
  cmd->add_option("--burn-in", o.burn_in, "burn-in sweeps");
  cmd->add_option("--samples", o.samples, "stored samples");
  cmd->add_option("--clusters-x", o.clusters_x, "cluster count for the x view");
  cmd->add_option("--clusters-y", o.clusters_y, "cluster count for the y view");
}

cli::RunConfig resolve(const Options& o) {
  cli::RunConfig c = cli::load_run_config(o.config.empty() ? std::nullopt
                                                           : std::optional<std::filesystem::path>(o.config));
  if (o.seed) {
    c.sampler.seed = *o.seed;
    c.synthetic.data_seed = *o.seed;
  }
  if (o.burn_in) c.sampler.burn_in = *o.burn_in;
  if (o.samples) c.sampler.n_samples = *o.samples;
  if (o.clusters_x) c.layout.k_clusters_x = *o.clusters_x;
  if (o.clusters_y) c.layout.k_clusters_y = *o.clusters_y;
  if (!o.grid.empty()) c.selection.cluster_counts_x = c.selection.cluster_counts_y = cli::parse_grid(o.grid);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-way, multi-view Bayesian latent-variable model"};
  app.require_subcommand(0, 1);
  Options o;
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the effective configuration as JSON and exit");
  app.add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);

  auto* pre = app.add_subcommand("preprocess", "center and scale both views by the control population");
  add_data(pre, o);
  pre->add_option("--out", o.out, "output directory");

  auto* sel = app.add_subcommand("select", "cross-validated choice of cluster counts");
  add_data(sel, o);
  add_sampler(sel, o);
  sel->add_option("--grid", o.grid, "cluster counts, e.g. 2:5 or 2,3,4");
  sel->add_option("--out", o.out, "output directory");

  auto* fit = app.add_subcommand("fit", "Gibbs sampling, chain checkpoint and effect report");
  add_data(fit, o);
  add_sampler(fit, o);
  fit->add_option("--out", o.out, "output directory");

  auto* synth = app.add_subcommand("synth", "generate a dataset with known effects");
  synth->add_option("--seed", o.seed, "data seed");
  synth->add_option("--n", o.n, "sample count (default: last of the n grid)");
  synth->add_option("--out", o.out, "output directory");

  auto* report = app.add_subcommand("report", "regenerate the effect report from a chain");
  report->add_option("--chain", o.chain, "chain checkpoint (JSON Lines)")->required()->check(CLI::ExistingFile);
  report->add_option("--out", o.out, "output directory");

  auto* study = app.add_subcommand("study", "effect recovery over the n grid of the synthetic spec");
  add_sampler(study, o);
  study->add_option("--kind", o.kind, "recovery or specificity")
      ->check(CLI::IsMember({"recovery", "specificity"}));
  study->add_option("--out", o.out, "output directory");

  // --config is accepted before or after the subcommand.
  for (auto* cmd : {sel, fit, synth, study})
    cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const cli::RunConfig config = resolve(o);
    if (print_config) {
      std::cout << cli::to_json(config).dump(2) << '\n';
      return 0;
    }
    if (*pre)
      cli::cmd_preprocess({o.x, o.y, o.covariates}, o.out);
    else if (*sel)
      cli::cmd_select({o.x, o.y, o.covariates}, config, o.out);
    else if (*fit)
      cli::cmd_fit({o.x, o.y, o.covariates}, config, o.out);
    else if (*synth)
      cli::cmd_synth(config, o.n, o.out);
    else if (*report)
      cli::cmd_report(o.chain, o.out);
    else if (*study)
      cli::cmd_study(config, o.kind, o.out);
    else
      std::cout << app.help();
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const DesignError& e) {
    std::cerr << "design error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
