#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rbu/generators.hpp"
#include "rbu/stochastic.hpp"

namespace rbu {

// Candidate model (beta, q): discount rate and Girsanov kernel, both sampled
// at the left end of every step.
struct ModelPair {
  ProcessPath beta;  // nodes N, dim 1
  ProcessPath q;     // nodes N, dim d
  std::string family = "constant";
  std::vector<double> params;
  // g*(beta, q) along the paths when it is already known (feedback models).
  std::optional<ProcessPath> gstar;

  static ModelPair constant(double beta, std::vector<double> q, std::size_t paths, std::size_t steps);
};

struct GstarPath {
  bool feasible = true;
  ProcessPath values;  // nodes N, dim 1
  std::size_t infeasible_nodes = 0;
};

// g*(beta_t, q_t) on every node. Full-layout models without a stored path
// need an analytic conjugate.
GstarPath conjugate_path(const Generator& g, const ModelPair& model, const SearchBox& box = {});

}  // namespace rbu
