#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <string>

#include "rbu/config.hpp"
#include "rbu/error.hpp"

using namespace rbu;

#ifndef RBU_SOURCE_DIR
#define RBU_SOURCE_DIR "."
#endif

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    return e.where();
  }
  return "";
}

}  // namespace

TEST_CASE("empty document gives the defaults") {
  CHECK(parse_config_text("{}") == ExperimentConfig{});
  CHECK(parse_config_text("# nothing\n{}\n") == ExperimentConfig{});
}

TEST_CASE("yaml and json forms agree") {
  const std::string yaml = R"(
market:
  mu: [0.04, 0.06]
  sigma: [[0.2, 0.0], [0.05, 0.3]]
  x0: 2
grid: {N: 30}
mc: {M: 500, seed: 9}
utility: {kind: power, r: 0.3}
generator: {kind: g_expectation, base: norm, coefficient: 0.2}
strategy_family: {lo: [0, 0], hi: [2, 2], density: 5}
model_family: {lo: [-1, -1], hi: [1, 1]}
characterize:
  refinement: [[10, 100], [20, 200]]
outputs: {dir: "x", formats: [csv]}
)";
  ExperimentConfig a = parse_config_text(yaml);
  CHECK(a.mu == std::vector<double>{0.04, 0.06});
  CHECK(a.sigma[1][1] == 0.3);
  CHECK(a.x0 == 2.0);
  CHECK(a.steps == 30);
  CHECK(a.paths == 500);
  CHECK(a.seed == 9);
  CHECK(a.utility == "power");
  CHECK(a.risk == 0.3);
  CHECK(a.generator.base == "norm");
  CHECK(a.refinement_steps == std::vector<std::size_t>{10, 20});
  CHECK(a.refinement_paths == std::vector<std::size_t>{100, 200});
  CHECK(a.out_dir == "x");
  CHECK_FALSE(a.write_json);
  CHECK(a.write_csv);

  ExperimentConfig b = parse_config_text(config_to_json(a).dump());
  CHECK(a == b);
  CHECK(parse_config_text(config_to_yaml(a)) == a);
  CHECK(config_from_json(config_to_json(a)) == a);
}

TEST_CASE("scalar promotes to a one-element vector") {
  ExperimentConfig c = parse_config_text("market: {mu: 0.07, sigma: [0.3]}\n");
  CHECK(c.mu == std::vector<double>{0.07});
  CHECK(c.sigma == std::vector<std::vector<double>>{{0.3}});
}

TEST_CASE("errors name the offending field") {
  CHECK(config_error("market: {volatility: 1}") == "config.market.volatility");
  CHECK(config_error("grid: {N: 0}") == "config.grid.N");
  CHECK(config_error("mc: {M: 1}") == "config.mc.M");
  CHECK(config_error("mc: {M: -5}") == "config.mc.M");
  CHECK(config_error("utility: {kind: cara}") == "config.utility.kind");
  CHECK(config_error("utility: {kind: power, r: 1.5}") == "config.utility.r");
  CHECK(config_error("utility: {kind: exponential, r: 0}") == "config.utility.r");
  CHECK(config_error("market: {x0: 0}") == "config.market.x0");
  CHECK(config_error("market: {T: -1}") == "config.market.T");
  CHECK(config_error("market: {mu: [0.05, 0.1]}") == "config.market.sigma");
  CHECK(config_error("market: {sigma: [[0.2, 0.1], [0.4, 0.2]], mu: [0.1, 0.1]}\n"
                     "strategy_family: {lo: [0, 0], hi: [1, 1]}\nmodel_family: {lo: [-1, -1], hi: [1, 1]}") ==
        "config.market.sigma");
  CHECK(config_error("strategy_family: {lo: [0, 0]}") == "config.strategy_family.lo");
  CHECK(config_error("model_family: {kind: constant}") == "config.model_family.lo");
  CHECK(config_error("solver: {degree: 40}") == "config.solver.degree");
  CHECK(config_error("muckenhoupt: {p: 1}") == "config.muckenhoupt.p");
  CHECK(config_error("outputs: {formats: [xml]}") == "config.outputs.formats");
  CHECK(config_error("grid: {N: ten}") == "config.grid.N");
  CHECK(config_error("[1, 2]") == "config.root");
  CHECK(config_error("market: {mu: [0.05") != "");
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"reference.yaml", "minimal.yaml"}) {
    ExperimentConfig c = load_config(std::string(RBU_SOURCE_DIR) + "/tools/configs/" + name);
    CHECK(c.paths >= 2);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), Error);
}
