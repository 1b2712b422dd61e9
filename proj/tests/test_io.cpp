#include "proplab/config.hpp"
#include "proplab/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <limits>

using namespace proplab;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("proplab_test_" + name);
  fs::remove_all(p);
  return p.string();
}

}  // namespace

TEST_CASE("doubles survive text round trips exactly") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::numeric_limits<double>::denorm_min(),
                   std::numeric_limits<double>::max()})
    CHECK(parse_double(format_double(x)) == x);
  CHECK_THROWS_AS(parse_double("1.5x"), ValidationError);
}

TEST_CASE("matrix CSV round trip") {
  const std::string dir = scratch("matrix");
  ensure_directory(dir);
  MatrixXd m(2, 3);
  m << 1.0 / 3.0, -0.0, 1e-17, 2.0, 3.5, -7.25;
  write_matrix_csv(dir + "/m.csv", m);
  CHECK(read_matrix_csv(dir + "/m.csv") == m);
  CHECK_THROWS_AS(read_matrix_csv(dir + "/missing.csv"), ValidationError);
}

TEST_CASE("dataset round trip is bit-exact") {
  const std::string dir = scratch("dataset");
  const TimeGrid grid(12, 1.0);
  const auto g = toeplitz_embed(power_law_kernel(0.01, 0.4, grid));
  const Dataset d = generate_dataset(TraderMixConfig{}, g, OUParams{}, 7, grid, 21);
  write_dataset(dir, d);
  const Dataset r = read_dataset(dir);
  REQUIRE(r.size() == d.size());
  CHECK(r.grid == d.grid);
  for (std::size_t n = 0; n < d.size(); ++n) {
    CHECK(r.episodes[n].S == d.episodes[n].S);
    CHECK(r.episodes[n].u == d.episodes[n].u);
    CHECK(r.episodes[n].A == d.episodes[n].A);
    CHECK(r.episodes[n].y == d.episodes[n].y);
  }
  CHECK(r.provenance.seed == 21);
  CHECK(r.provenance.noise_scale == d.provenance.noise_scale);
  CHECK(r.provenance.true_propagator == d.provenance.true_propagator);
  // Writing the same dataset twice gives identical files.
  const std::string again = scratch("dataset_again");
  write_dataset(again, r);
  CHECK(read_text(dir + "/episodes.csv") == read_text(again + "/episodes.csv"));
}

TEST_CASE("estimation and strategy round trips") {
  const std::string dir = scratch("estimation");
  const TimeGrid grid(6, 1.0);
  const auto g = toeplitz_embed(power_law_kernel(0.01, 0.4, grid));
  const Dataset d = generate_dataset(TraderMixConfig{}, g, OUParams{}, 30, grid, 2);
  for (auto mode : {EstimationMode::volterra, EstimationMode::convolution}) {
    EstimationConfig cfg;
    cfg.mode = mode;
    const auto e = estimate(d, cfg);
    write_estimation(dir, e, grid);
    const auto r = read_estimation(dir);
    CHECK(r.mode == mode);
    CHECK(r.projected == e.projected);
    CHECK(r.unconstrained == e.unconstrained);
    CHECK(r.gram.matrix == e.gram.matrix);
    CHECK(r.confidence == e.confidence);
    CHECK(r.noise_scale == e.noise_scale);
    CHECK(r.kernel_bound == e.kernel_bound);
    fs::remove_all(dir);
  }

  const std::string sdir = scratch("strategy");
  ensure_directory(sdir);
  Strategy s = twap_strategy(1000.0, 6);
  s.kind = StrategyKind::pessimistic;
  s.diagnostics.iterations = 12;
  s.diagnostics.ball_active = true;
  write_strategy(sdir + "/s.csv", s, grid);
  const Strategy t = read_strategy(sdir + "/s.csv");
  CHECK(t.u == s.u);
  CHECK(t.kind == StrategyKind::pessimistic);
  CHECK(t.x0 == 1000.0);
  CHECK(t.diagnostics.iterations == 12);
  CHECK(t.diagnostics.ball_active);
}

TEST_CASE("config JSON round trip and validation") {
  ExperimentConfig c;
  c.kernel.kind = "exponential";
  c.kernel.rho = 0.1;
  c.steps = 20;
  c.dataset.episodes = 9;
  c.dataset.seed = 77;
  c.estimation.mode = EstimationMode::volterra;
  c.control.signal = "ou";
  c.jobs = 3;
  const ExperimentConfig r = config_from_json(to_json(c));
  CHECK(to_json(r) == to_json(c));
  CHECK(r.kernel.kind == "exponential");
  CHECK(r.dataset.seed == 77);

  nlohmann::json bad = to_json(c);
  bad["unexpected"] = 1;
  CHECK_THROWS_AS(config_from_json(bad), ValidationError);
  nlohmann::json neg = to_json(c);
  neg["grid"]["M"] = 0;
  CHECK_THROWS_AS(config_from_json(neg), ValidationError);
  nlohmann::json kind = to_json(c);
  kind["kernel"]["kind"] = "cubic";
  CHECK_THROWS_AS(config_from_json(kind), ValidationError);
}

TEST_CASE("config drives dataset generation") {
  ExperimentConfig c;
  c.steps = 10;
  c.dataset.episodes = 4;
  const Dataset a = generate_from_config(c);
  CHECK(a.size() == 4);
  CHECK(a.grid.size() == 10);
  c.dataset.generator = "noisy";
  const Dataset b = generate_from_config(c);
  CHECK(b.provenance.generator == "noisy");
}

TEST_CASE("tidy tables") {
  const std::string dir = scratch("table");
  ensure_directory(dir);
  Table t{{"a", "b"}, {}};
  t.add({"1", "x"});
  CHECK_THROWS_AS(t.add({"only"}), ValidationError);
  t.write(dir + "/t.csv");
  CHECK(read_text(dir + "/t.csv") == "a,b\n1,x\n");
}
