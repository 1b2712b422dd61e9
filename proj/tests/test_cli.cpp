#include "proplab/config.hpp"
#include "proplab/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

using namespace proplab;
namespace fs = std::filesystem;

namespace {

const fs::path work = fs::temp_directory_path() / "proplab_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(PROPLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& name) { return (work / name).string(); }

std::string small_config(double confidence = -1.0) {
  ExperimentConfig c;
  c.steps = 12;
  c.dataset.episodes = 40;
  c.dataset.seed = 5;
  c.control.x0 = 100.0;
  c.control.pessimism.confidence = confidence;
  const std::string file = path(confidence < 0.0 ? "config.json" : "config_zero.json");
  write_json(file, to_json(c));
  return file;
}

}  // namespace

TEST_CASE("simulate, estimate, optimize and evaluate") {
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string cfg = small_config();

  REQUIRE(run("simulate --config " + cfg + " --out " + path("ds")) == 0);
  REQUIRE(run("simulate --config " + cfg + " --out " + path("ds2")) == 0);
  CHECK(read_text(path("ds") + "/episodes.csv") == read_text(path("ds2") + "/episodes.csv"));
  CHECK(read_dataset(path("ds")).size() == 40);

  REQUIRE(run("estimate --config " + cfg + " --dataset " + path("ds") + " --out " + path("est")) == 0);
  const auto report = read_json(path("est") + "/report.json");
  CHECK(report.contains("err_proj"));
  CHECK(report.at("mode") == "convolution");

  REQUIRE(run("optimize --config " + cfg + " --estimation " + path("est") + " --out " + path("strat")) == 0);
  for (const char* f : {"greedy.csv", "pessimistic.csv", "optimal.csv"}) CHECK(fs::exists(path("strat") + "/" + f));

  REQUIRE(run("evaluate --config " + cfg + " --estimation " + path("est") + " --strategies " + path("strat") +
              " --out " + path("eval")) == 0);
  const auto ev = read_json(path("eval") + "/evaluation.json");
  CHECK(ev.contains("greedy"));
  CHECK(ev.contains("pessimistic"));
  CHECK(fs::exists(path("eval") + "/costs.csv"));
}

TEST_CASE("zero confidence makes pessimism greedy") {
  fs::create_directories(work);
  const std::string cfg = small_config(0.0);
  REQUIRE(run("simulate --config " + cfg + " --out " + path("z_ds")) == 0);
  REQUIRE(run("estimate --config " + cfg + " --dataset " + path("z_ds") + " --out " + path("z_est")) == 0);
  REQUIRE(run("optimize --config " + cfg + " --estimation " + path("z_est") + " --out " + path("z_strat")) == 0);
  const Strategy g = read_strategy(path("z_strat") + "/greedy.csv");
  const Strategy p = read_strategy(path("z_strat") + "/pessimistic.csv");
  CHECK((g.u - p.u).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("evaluating with the true propagator has no spurious correlation") {
  fs::create_directories(work);
  const std::string cfg_file = small_config();
  const ExperimentConfig c = load_config(cfg_file);
  const TimeGrid grid = c.grid();
  REQUIRE(run("simulate --config " + cfg_file + " --out " + path("t_ds")) == 0);
  EstimationConfig ec = c.estimation;
  EstimationResult r = estimate(read_dataset(path("t_ds")), ec);
  r.projected = c.kernel.kernel(grid).values();  // replace the estimate by the truth
  write_estimation(path("t_est"), r, grid);
  REQUIRE(run("optimize --config " + cfg_file + " --estimation " + path("t_est") + " --out " + path("t_strat")) == 0);
  REQUIRE(run("evaluate --config " + cfg_file + " --estimation " + path("t_est") + " --strategies " +
              path("t_strat") + " --out " + path("t_eval")) == 0);
  const auto ev = read_json(path("t_eval") + "/evaluation.json");
  CHECK(std::abs(ev.at("greedy").at("spurious_correlation").get<double>()) < 1e-9);
  CHECK(std::abs(ev.at("greedy").at("suboptimality").get<double>()) < 1e-8);
}

TEST_CASE("single-episode dataset") {
  fs::create_directories(work);
  CHECK(run("simulate --seed 3 --out " + path("one") + " --config " + small_config()) == 0);
  ExperimentConfig c = load_config(path("config.json"));
  c.dataset.episodes = 1;
  write_json(path("one.json"), to_json(c));
  REQUIRE(run("simulate --config " + path("one.json") + " --out " + path("one")) == 0);
  CHECK(read_dataset(path("one")).size() == 1);
}

TEST_CASE("exit codes") {
  fs::create_directories(work);
  CHECK(run("estimate --dataset " + path("does_not_exist") + " --out " + path("x")) == 2);
  CHECK(run("reproduce no-such-target") == 2);
  CHECK(run("") == 2);
  write_text(path("broken.json"), "{\"grid\": {\"M\": 0}}");
  CHECK(run("simulate --config " + path("broken.json") + " --out " + path("x")) == 2);
  write_text(path("unknown.json"), "{\"colour\": 1}");
  CHECK(run("simulate --config " + path("unknown.json") + " --out " + path("x")) == 2);
}

TEST_CASE("PROPLAB_OUT overrides --out") {
  fs::create_directories(work);
  const std::string cfg = small_config();
  const std::string cmd = "PROPLAB_OUT=" + path("env_out") + " " + std::string(PROPLAB_CLI) + " simulate --config " +
                          cfg + " --out " + path("flag_out") + " > /dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(path("env_out") + "/episodes.csv"));
  CHECK_FALSE(fs::exists(path("flag_out")));
}

TEST_CASE("reproduction targets write their tables") {
  fs::create_directories(work);
  const std::string cfg = small_config();
  REQUIRE(run("reproduce table-accuracy --config " + cfg + " --out " + path("rep_acc")) == 0);
  const std::string acc = read_text(path("rep_acc") + "/table_accuracy.csv");
  for (const char* n : {",63,", ",126,", ",252,"}) CHECK(acc.find(n) != std::string::npos);
  CHECK(acc.find("median,exponential,252") != std::string::npos);
  CHECK(acc.find("median,power_law,252") != std::string::npos);

  REQUIRE(run("reproduce table-costs --config " + cfg + " --out " + path("rep_cost")) == 0);
  const std::string costs = read_text(path("rep_cost") + "/table_costs.csv");
  for (const char* row : {"computed,optimal,", "computed,greedy,", "computed,pessimistic,"})
    CHECK(costs.find(row) != std::string::npos);

  REQUIRE(run("reproduce figure-strategies --config " + cfg + " --out " + path("rep_fig")) == 0);
  CHECK(fs::exists(path("rep_fig") + "/figure_strategies.csv"));
}
