#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "mwmv/csv.hpp"
#include "mwmv/errors.hpp"
#include "mwmv/preprocess.hpp"
#include "mwmv/state_io.hpp"

using namespace mwmv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mwmv_unit";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("decimal text round-trips through format_double") {
  std::mt19937_64 engine(5);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-30, 30);
  for (int t = 0; t < 2000; ++t) {
    const double v = std::ldexp(mant(engine), ex(engine));
    CHECK(parse_double(format_double(v)) == v);
    // Values with at most 15 significant digits come back as the same text.
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.14e", v);
    const double fifteen = std::stod(buf);
    CHECK(parse_double(format_double(fifteen)) == fifteen);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(parse_double("abc"), InputError);
}

TEST_CASE("matrix CSV round-trips values exactly") {
  LabeledMatrix m;
  m.row_ids = {"s1", "s2", "s3"};
  m.col_names = {"a", "b"};
  m.values.resize(3, 2);
  m.values << 1.0 / 3.0, -2.5e-17, 123456789.123456, 0.1, 1e300, -7.0;
  const auto path = scratch("m.csv");
  write_matrix_csv(path, m);
  const auto back = read_matrix_csv(path);
  CHECK(back.row_ids == m.row_ids);
  CHECK(back.col_names == m.col_names);
  CHECK(back.values == m.values);
  write_matrix_csv(scratch("m2.csv"), back);
  CHECK(read_text(path) == read_text(scratch("m2.csv")));
}

TEST_CASE("dataset loading aligns samples and rejects bad inputs") {
  write_text(scratch("x.csv"), "sample_id,v1,v2\ns1,1,2\ns2,3,4\ns3,5,7\n");
  write_text(scratch("y.csv"), "sample_id,w1\ns3,30\ns1,10\ns2,20\n");
  write_text(scratch("c.csv"), "sample_id,a,b\ns2,1,0\ns3,0,1\ns1,0,0\n");
  const auto d = load_dataset(scratch("x.csv"), scratch("y.csv"), scratch("c.csv"));
  CHECK(d.sample_ids == std::vector<std::string>{"s1", "s2", "s3"});
  CHECK(d.y(0, 0) == 10.0);
  CHECK(d.y(2, 0) == 30.0);
  CHECK(d.covariates[0] == Cell{0, 0});
  CHECK(d.covariates[1] == Cell{1, 0});

  write_text(scratch("y_bad.csv"), "sample_id,w1\ns9,30\ns1,10\ns2,20\n");
  CHECK_THROWS_AS(load_dataset(scratch("x.csv"), scratch("y_bad.csv"), scratch("c.csv")), InputError);
  write_text(scratch("x_nan.csv"), "sample_id,v1,v2\ns1,1,nan\ns2,3,4\ns3,5,7\n");
  CHECK_THROWS_AS(load_dataset(scratch("x_nan.csv"), scratch("y.csv"), scratch("c.csv")), InputError);
  write_text(scratch("c_ctrl.csv"), "sample_id,a,b\ns2,1,0\ns3,0,1\ns1,1,1\n");
  auto no_control = load_dataset(scratch("x.csv"), scratch("y.csv"), scratch("c_ctrl.csv"));
  CHECK_THROWS_AS(no_control.validate(), DesignError);
}

TEST_CASE("control standardization gives zero mean and unit sd on controls") {
  std::mt19937_64 engine(9);
  std::normal_distribution<double> nd(3.0, 2.0);
  PairedDataset raw;
  const int n = 24;
  raw.x.resize(n, 5);
  raw.y.resize(n, 4);
  for (int j = 0; j < n; ++j) {
    raw.covariates.push_back({j % 2, (j / 2) % 2});
    for (int i = 0; i < 5; ++i) raw.x(j, i) = nd(engine) * (i + 1);
    for (int i = 0; i < 4; ++i) raw.y(j, i) = nd(engine) - i;
  }
  // Constant over controls: dropped.
  for (int j = 0; j < n; ++j)
    if (raw.covariates[static_cast<size_t>(j)] == Cell{0, 0}) raw.y(j, 2) = 4.0;
  raw.validate();
  const auto [data, report] = center_scale_by_control(raw);
  CHECK(data.y.cols() == 3);
  REQUIRE(report.dropped_variables.size() == 1);
  CHECK(report.dropped_variables[0].name == raw.variable_names_y[2]);
  for (View v : kViews) {
    const MatrixXd& m = data.view(v);
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
      double sum = 0.0, ss = 0.0;
      int cnt = 0;
      for (int j = 0; j < n; ++j)
        if (data.covariates[static_cast<size_t>(j)] == Cell{0, 0}) {
          sum += m(j, i);
          ++cnt;
        }
      const double mean = sum / cnt;
      for (int j = 0; j < n; ++j)
        if (data.covariates[static_cast<size_t>(j)] == Cell{0, 0}) ss += (m(j, i) - mean) * (m(j, i) - mean);
      CHECK(std::abs(mean) < 1e-10);
      CHECK(std::abs(std::sqrt(ss / (cnt - 1)) - 1.0) < 1e-10);
    }
  }
  CHECK(report.n_control == n / 4);
}

TEST_CASE("state and chain records round-trip") {
  const auto inst = oracle::small_instance(4);
  const Json j = to_json(inst.state, inst.layout);
  const ModelState back = state_from_json(Json::parse(j.dump()), inst.layout);
  CHECK(identical(back, inst.state));

  PosteriorChain chain;
  chain.layout = inst.layout;
  chain.hypers = inst.hypers;
  chain.config.seed = 42;
  chain.config.burn_in = 7;
  chain.sign_flips.assign(static_cast<size_t>(inst.layout.k_z()), 1);
  chain.sign_flips[1] = -1;
  chain.states = {inst.state, oracle::small_instance(5).state};
  const auto path = scratch("chain.jsonl");
  write_chain(path, chain, inst.data.variable_names_x, inst.data.variable_names_y);
  const auto loaded = read_chain(path);
  CHECK(loaded.chain.layout == chain.layout);
  CHECK(loaded.chain.sign_flips == chain.sign_flips);
  CHECK(loaded.chain.config.seed == 42);
  CHECK(loaded.chain.config.burn_in == 7);
  CHECK(loaded.names_x == inst.data.variable_names_x);
  REQUIRE(loaded.chain.states.size() == 2);
  CHECK(identical(loaded.chain.states[1], chain.states[1]));
  write_chain(scratch("chain2.jsonl"), loaded.chain, loaded.names_x, loaded.names_y);
  CHECK(read_text(path) == read_text(scratch("chain2.jsonl")));

  // A truncated checkpoint is rejected.
  const std::string text = read_text(path);
  write_text(scratch("chain_cut.jsonl"), text.substr(0, text.rfind('\n', text.size() - 2) + 1));
  CHECK_THROWS_AS(read_chain(scratch("chain_cut.jsonl")), InputError);
}

TEST_CASE("configuration JSON round-trips") {
  SamplerConfig c;
  c.burn_in = 12;
  c.seed = 99;
  c.joint_effects_z = false;
  c.set_only({Block::z, Block::effects});
  const SamplerConfig back = sampler_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  Hyperparameters h;
  h.ard_shape = 2.5;
  h.iw_dof_x = 7.0;
  CHECK(to_json(hypers_from_json(to_json(h))) == to_json(h));
  ModelLayout l;
  l.k_shared = 2;
  l.max_b = 3;
  CHECK(layout_from_json(to_json(l)) == l);
}
