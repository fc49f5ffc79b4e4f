#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rbu {

struct GeneratorConfig {
  std::string kind = "certainty_equivalent";  // certainty_equivalent | g_expectation | zero | quadratic | ratio_quadratic | norm
  std::string base = "zero";                  // base kind for g_expectation: zero | norm
  double coefficient = 1.0;                   // c for quadratic/ratio_quadratic, k for norm and the norm base

  bool operator==(const GeneratorConfig&) const = default;
};

struct ExperimentConfig {
  // market
  std::vector<double> mu{0.05};
  std::vector<std::vector<double>> sigma{{0.2}};
  double x0 = 1.0;
  double horizon = 1.0;
  // grid and Monte Carlo
  std::size_t steps = 100;
  std::size_t paths = 100000;
  std::uint64_t seed = 42;
  // utility
  std::string utility = "log";  // log | power | exponential
  double risk = 0.5;            // r for power / exponential
  GeneratorConfig generator;
  // endowment
  std::string endowment = "constant";  // constant | put_on_stock
  double endowment_value = 0.0;
  double endowment_strike = 1.0;
  std::size_t endowment_stock = 0;
  // strategy family
  std::string strategy_kind = "constant_fraction";  // constant_fraction | constant_amount
  std::vector<double> strategy_lo{0.0};
  std::vector<double> strategy_hi{3.0};
  std::size_t strategy_density = 13;
  bool strategy_refine = true;
  std::size_t strategy_budget = 60;
  std::string strategy_method = "auto";  // auto | bsde | ce_oracle
  // model family
  std::string model_kind = "parabola";  // parabola | constant
  std::vector<double> model_lo{-1.0};
  std::vector<double> model_hi{0.5};
  double model_curvature = 0.0;  // 0 selects the generator's own curvature
  double model_margin = 0.0;
  std::size_t model_density = 31;
  bool model_refine = true;
  bool model_feedback = true;
  std::size_t model_budget = 200;
  // solver
  std::string basis = "polynomial";  // polynomial | bins
  std::size_t degree = 4;
  std::size_t bins = 16;
  std::string state = "wealth";  // wealth | brownian
  std::size_t picard = 2;
  bool multistep = true;
  // minimax
  std::size_t minimax_strategy_density = 9;
  std::size_t minimax_model_density = 21;
  std::size_t minimax_paths = 0;  // 0 uses paths
  // characterize
  std::vector<std::size_t> refinement_steps{50, 100, 200};
  std::vector<std::size_t> refinement_paths{25000, 50000, 100000};
  // muckenhoupt
  double muckenhoupt_p = 2.0;
  std::size_t muckenhoupt_tau = 0;
  // conditions
  double conditions_y_lo = 0.1;
  double conditions_y_hi = 10.0;
  double conditions_z_max = 5.0;
  std::size_t conditions_points = 64;
  // outputs
  std::string out_dir = "out";
  bool write_json = true;
  bool write_csv = true;
  unsigned threads = 0;

  bool operator==(const ExperimentConfig&) const = default;
};

// Field-level validation; throws Error(config) naming the offending field.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Accepts the YAML form or its JSON mirror.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::string config_to_yaml(const ExperimentConfig& cfg);

}  // namespace rbu
