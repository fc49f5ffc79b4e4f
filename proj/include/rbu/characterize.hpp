#pragma once

#include <cstddef>
#include <vector>

#include "rbu/bsde.hpp"
#include "rbu/generators.hpp"
#include "rbu/market.hpp"
#include "rbu/model.hpp"
#include "rbu/regression.hpp"

namespace rbu {

// (p, k) of dp = -(theta p + q p + k) pi~ sigma dt + k dW^Q, p_T = scale * D_{0,T}.
struct AdjointSolution {
  ProcessPath p;  // nodes N+1
  ProcessPath k;  // nodes N, dim d
  std::vector<double> terminal;
  std::size_t nonpositive_nodes = 0;
  std::size_t regularized_steps = 0;
  double scale = 1.0;
  double dt = 0.0;
};

// Backward regression under P; Girsanov weights of each step enter the
// conditional expectations. wealth may be null for a Brownian basis.
AdjointSolution solve_adjoint(const ModelPair& model, const ProcessPath& pi_tilde, const MarketParams& market,
                              const PathBatch& paths, const WealthPath* wealth, const RegressionBasis& basis = {},
                              double terminal_scale = 1.0);

struct ResidualStats {
  double l2 = 0.0;   // sqrt(sum_i mean_m |r|^2 dt)
  double max = 0.0;  // worst node
  std::size_t nodes = 0;
};

// r = p theta + p q + k on every node.
ResidualStats max_principle_residual(const AdjointSolution& adjoint, const MarketParams& market,
                                     const ModelPair& model);

struct FocStats {
  double max_abs_gap = 0.0;
  double mean_gap = 0.0;
  double negative_fraction = 0.0;  // nodes with gap < -tol
  std::size_t nodes = 0;
};

// Fenchel-Young gap beta Y + q Z - g(Y, Z) - g*(beta, q) along the solution.
FocStats foc_residual(const Generator& g, const ModelPair& model, const BsdeSolution& solution, double tol = 1e-9);

}  // namespace rbu
