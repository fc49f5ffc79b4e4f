#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace rbu {

struct ParamBox {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const noexcept { return lo.size(); }
  std::vector<double> clamp(std::vector<double> x) const;
};

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
};

// Tensor grid with `density` points per axis (one point on degenerate axes).
std::vector<std::vector<double>> grid_points(const ParamBox& box, std::size_t density);

// Minimizes f over the box; points are clamped before evaluation. Returns
// the best point seen, which is never worse than x0.
OptimResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                        const ParamBox& box, double initial_step, std::size_t max_evaluations = 200,
                        double tol = 1e-8);

}  // namespace rbu
