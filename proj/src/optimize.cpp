#include "rbu/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rbu/error.hpp"

namespace rbu {

std::vector<double> ParamBox::clamp(std::vector<double> x) const {
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::clamp(x[j], lo[j], hi[j]);
  return x;
}

std::vector<std::vector<double>> grid_points(const ParamBox& box, std::size_t density) {
  require(box.lo.size() == box.hi.size(), "optimize.grid", "box bounds differ in size");
  require(density >= 1, "optimize.grid", "density must be >= 1");
  const std::size_t d = box.dim();
  std::vector<std::size_t> counts(d);
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) {
    require(box.lo[j] <= box.hi[j], "optimize.grid", "box lower bound exceeds upper bound");
    counts[j] = box.lo[j] == box.hi[j] ? 1 : std::max<std::size_t>(density, 2);
    total *= counts[j];
  }
  std::vector<std::vector<double>> pts;
  pts.reserve(total);
  for (std::size_t c = 0; c < total; ++c) {
    std::vector<double> x(d);
    std::size_t r = c;
    for (std::size_t j = 0; j < d; ++j) {
      std::size_t k = r % counts[j];
      r /= counts[j];
      x[j] = counts[j] == 1 ? box.lo[j] : box.lo[j] + (box.hi[j] - box.lo[j]) * static_cast<double>(k) / (counts[j] - 1);
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

OptimResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                        const ParamBox& box, double initial_step, std::size_t max_evaluations, double tol) {
  const std::size_t d = x0.size();
  OptimResult best;
  auto eval = [&](const std::vector<double>& x) {
    double v = f(x);
    ++best.evaluations;
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    if (best.x.empty() || v < best.value) {
      best.value = v;
      best.x = x;
    }
    return v;
  };
  x0 = box.clamp(std::move(x0));
  if (d == 0) {
    eval(x0);
    return best;
  }
  std::vector<std::vector<double>> simplex(d + 1, x0);
  std::vector<double> fv(d + 1);
  fv[0] = eval(x0);
  for (std::size_t j = 0; j < d; ++j) {
    double width = box.hi[j] - box.lo[j];
    double step = std::min(initial_step, width > 0 ? width : initial_step);
    simplex[j + 1][j] += step;
    if (simplex[j + 1][j] > box.hi[j]) simplex[j + 1][j] = x0[j] - step;
    simplex[j + 1] = box.clamp(simplex[j + 1]);
    fv[j + 1] = eval(simplex[j + 1]);
  }
  std::vector<std::size_t> order(d + 1);
  while (best.evaluations < max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t lo = order.front(), hi = order.back(), second = order[d - 1];
    double spread = std::abs(fv[hi] - fv[lo]);
    double size = 0.0;
    for (std::size_t k = 0; k <= d; ++k)
      for (std::size_t j = 0; j < d; ++j) size = std::max(size, std::abs(simplex[k][j] - simplex[lo][j]));
    if ((std::isfinite(spread) && spread <= tol * (1.0 + std::abs(fv[lo]))) && size <= std::sqrt(tol)) break;
    if (size <= 1e-12) break;

    std::vector<double> centroid(d, 0.0);
    for (std::size_t k = 0; k <= d; ++k)
      if (k != hi)
        for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[k][j] / static_cast<double>(d);
    auto along = [&](double t) {
      std::vector<double> x(d);
      for (std::size_t j = 0; j < d; ++j) x[j] = centroid[j] + t * (simplex[hi][j] - centroid[j]);
      return box.clamp(std::move(x));
    };
    auto xr = along(-1.0);
    double fr = eval(xr);
    if (fr < fv[lo]) {
      auto xe = along(-2.0);
      double fe = eval(xe);
      if (fe < fr) {
        simplex[hi] = xe, fv[hi] = fe;
      } else {
        simplex[hi] = xr, fv[hi] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[hi] = xr, fv[hi] = fr;
    } else {
      auto xc = fr < fv[hi] ? along(-0.5) : along(0.5);
      double fc = eval(xc);
      if (fc < std::min(fr, fv[hi])) {
        simplex[hi] = xc, fv[hi] = fc;
      } else {
        for (std::size_t k = 0; k <= d; ++k) {
          if (k == lo) continue;
          for (std::size_t j = 0; j < d; ++j) simplex[k][j] = simplex[lo][j] + 0.5 * (simplex[k][j] - simplex[lo][j]);
          fv[k] = eval(simplex[k]);
        }
      }
    }
  }
  return best;
}

}  // namespace rbu
