#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rbu/generators.hpp"
#include "rbu/market.hpp"
#include "rbu/model.hpp"
#include "rbu/parallel.hpp"
#include "rbu/regression.hpp"
#include "rbu/stochastic.hpp"
#include "rbu/utility.hpp"

namespace rbu {

struct SolverConfig {
  RegressionBasis basis;
  std::size_t picard = 2;
  bool multistep = true;
  double y_floor = 1e-6;
  std::size_t bootstrap_blocks = 50;
  std::size_t bootstrap_resamples = 200;
  std::uint64_t bootstrap_seed = 1;
};

// Discrete solution of dY = g(Y, Z) dt - Z dW, Y_T = H.
struct BsdeSolution {
  ProcessPath y;  // nodes N+1
  ProcessPath z;  // nodes N, dim d
  std::vector<double> terminal;
  double y0 = 0.0;             // mean of the pathwise representation
  double y0_se = 0.0;          // block bootstrap
  double y0_regression = 0.0;  // value of the regressed Y at t = 0
  std::size_t floor_hits = 0;
  std::size_t regularized_steps = 0;
  RegressionBasis basis;
  std::size_t picard = 0;
};

// wealth may be null when the basis regresses on the Brownian state.
BsdeSolution solve_backward(const Generator& g, std::span<const double> terminal, const WealthPath* wealth,
                            const PathBatch& paths, const SolverConfig& cfg = {});

struct CeOracle {
  ProcessPath y;  // nodes N+1
  double y0 = 0.0;
  double y0_se = 0.0;
};

// u^{-1}(E[u(H)]) with a delta-method standard error.
MeanEstimate certainty_equivalent_value(const Utility& utility, std::span<const double> terminal);

// u^{-1}(E[u(H) | F_t]) by direct regression of u(H).
CeOracle certainty_equivalent_oracle(const Utility& utility, std::span<const double> terminal,
                                     const WealthPath* wealth, const PathBatch& paths,
                                     const RegressionBasis& basis = {});

struct LinearRepValue {
  MeanEstimate value;
  MeanEstimate weight;  // terminal Girsanov weight, mean should be 1
};

// E_Q[D_T H + int D g* du] as a weighted P-average with left-point integrals.
LinearRepValue solve_linear_dual_rep(const ModelPair& model, const ProcessPath& gstar, std::span<const double> terminal,
                                     const PathBatch& paths);

struct SubsolutionResidual {
  double max_violation = 0.0;
  double mean_violation = 0.0;  // mean over pairs and paths of the positive part
  double terminal_violation = 0.0;
  std::size_t pairs = 0;
  std::size_t stride = 1;
};

// Worst [Y_s + sum g dt - sum Z dW - Y_t]^+ over grid pairs s < t on the stride grid,
// plus [Y_T - H]^+.
SubsolutionResidual subsolution_residual(const ProcessPath& y, const ProcessPath& z, const Generator& g,
                                         std::span<const double> terminal, const PathBatch& paths,
                                         std::size_t pair_stride = 0);

struct DriftStats {
  double min = 0.0;
  double mean = 0.0;
  double max_abs = 0.0;
  double violation_fraction = 0.0;
  std::size_t nodes = 0;
};

// u'(y) g(y, z) + 1/2 u''(y) |z|^2 at every visited (Y_i, Z_i).
DriftStats admissibility_drift(const Utility& utility, const Generator& g, const BsdeSolution& solution);

// Per-node summaries: t, mean Y, sd Y, mean Z_j.
std::string solution_csv(const BsdeSolution& solution, const TimeGrid& grid);

}  // namespace rbu
