#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbu/bsde.hpp"
#include "rbu/generators.hpp"
#include "rbu/market.hpp"
#include "rbu/model.hpp"
#include "rbu/optimize.hpp"
#include "rbu/utility.hpp"

namespace rbu {

enum class EndowmentKind { constant, put_on_stock };

// Bounded nonnegative endowment, independent of the strategy.
struct Endowment {
  EndowmentKind kind = EndowmentKind::constant;
  double value = 0.0;   // constant level, or scale of the put
  double strike = 1.0;  // put on S_T / S_0
  std::size_t stock = 0;

  std::vector<double> sample(const MarketParams& market, const PathBatch& paths) const;
};

enum class PrimalMethod { bsde, ce_oracle };

struct Problem {
  Generator g = Generator::zero();
  std::optional<Utility> utility;
  MarketParams market;
  Endowment endowment;
  SolverConfig solver;
  PrimalMethod method = PrimalMethod::bsde;
  SearchBox box;
};

struct PrimalResult {
  double value = 0.0;
  double std_error = 0.0;
  PrimalMethod method = PrimalMethod::bsde;
  std::vector<double> terminal;  // xi + X_T
  WealthPath wealth;
  std::optional<BsdeSolution> solution;
};

PrimalResult primal_value(const Strategy& strategy, const Problem& problem, const PathBatch& paths);

struct DualValue {
  bool feasible = true;
  MeanEstimate value;
  MeanEstimate weight;
  std::size_t infeasible_nodes = 0;
};

DualValue dual_objective(const ModelPair& model, const Generator& g, std::span<const double> terminal,
                         const PathBatch& paths, const SearchBox& box = {});

// (beta, q) = subgradient of g at every visited (Y_t, Z_t); g* stored from the
// Fenchel equality.
ModelPair subgradient_model(const BsdeSolution& solution, const Generator& g);

// Shifts the model by constants; g* is recomputed on use.
ModelPair perturb_model(const ModelPair& model, double dbeta, const std::vector<double>& dq);

struct GapResult {
  ModelPair model;
  DualValue dual;
  double primal = 0.0;
  double primal_se = 0.0;
  double gap = 0.0;  // |dual - primal| / |primal|, +inf for an infeasible model
};

GapResult close_gap_with_subgradient(const BsdeSolution& solution, const Generator& g, const PathBatch& paths);

enum class ModelFamilyKind { constant, parabola };

// constant: params (beta, q_1..q_d) on the box.
// parabola: params q on the box, beta = -|q|^2/(2 curvature) - margin.
struct ModelFamily {
  ModelFamilyKind kind = ModelFamilyKind::parabola;
  ParamBox box;
  double curvature = 1.0;
  double margin = 0.0;
  std::size_t density = 11;
  bool refine = true;
  bool include_feedback = false;
};

ModelPair family_model(const ModelFamily& family, const std::vector<double>& params, std::size_t paths,
                       std::size_t steps);

struct SweepRow {
  std::string family;
  std::vector<double> params;
  double value = 0.0;
  double std_error = 0.0;
  bool feasible = true;
};

struct DualSearchResult {
  ModelPair best;
  DualValue best_value;
  std::vector<SweepRow> rows;
  std::size_t evaluations = 0;
};

// Grid then simplex refinement over the family; `extra` models compete too.
DualSearchResult dual_search(const ModelFamily& family, const Generator& g, std::span<const double> terminal,
                             const PathBatch& paths, const std::vector<ModelPair>& extra = {},
                             std::size_t budget = 200, const SearchBox& box = {});

struct StrategyFamily {
  StrategyKind kind = StrategyKind::constant_fraction;
  ParamBox box;
  std::size_t density = 13;
  bool refine = true;
};

Strategy family_strategy(const StrategyFamily& family, const std::vector<double>& params);

struct StrategySearchResult {
  Strategy best = Strategy::fraction({0.0});
  std::vector<double> params;
  double value = 0.0;
  double std_error = 0.0;
  std::vector<SweepRow> rows;
  std::size_t evaluations = 0;
};

StrategySearchResult optimize_strategy(const StrategyFamily& family, const Problem& problem, const PathBatch& paths,
                                       std::size_t budget = 60);

struct MinimaxResult {
  double sup_inf = 0.0;
  double inf_sup = 0.0;
  double gap = 0.0;  // (inf_sup - sup_inf) / |inf_sup|
  std::vector<double> best_strategy;
  std::string best_model;
  std::size_t strategies = 0;
  std::size_t models = 0;
  std::size_t feasible_models = 0;
};

// Full strategy x model matrix of dual values over the two grids.
MinimaxResult minimax_gap(const StrategyFamily& strategies, const ModelFamily& models, const Problem& problem,
                          const PathBatch& paths);

}  // namespace rbu
