#include "rbu/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rbu/error.hpp"
#include "rbu/parallel.hpp"
#include "rbu/regression.hpp"

namespace rbu {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream key for path m: independent of how paths are scheduled.
std::uint64_t path_key(std::uint64_t seed, std::uint64_t m) { return splitmix64(splitmix64(seed) ^ splitmix64(m + 0x5851f42d4c957f2dULL)); }

void check_shape(const ProcessPath& q, const PathBatch& paths, const char* where) {
  if (q.paths() != paths.paths() || q.nodes() < paths.grid().steps() || q.dim() != paths.dim())
    fail(ErrorKind::invalid_argument, where, "integrand shape does not match the path batch");
}

}  // namespace

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps), dt_(0.0) {
  require(std::isfinite(horizon) && horizon > 0.0, "stochastic_core.TimeGrid", "horizon must be > 0");
  require(steps >= 1, "stochastic_core.TimeGrid", "step count must be >= 1");
  dt_ = horizon / static_cast<double>(steps);
}

PathBatch::PathBatch(TimeGrid grid, std::size_t paths, std::size_t dim, std::uint64_t seed,
                     std::vector<double> values)
    : grid_(grid), paths_(paths), dim_(dim), seed_(seed), values_(std::move(values)) {
  require(values_.size() == (grid_.steps() + 1) * paths_ * dim_, "stochastic_core.PathBatch",
          "value array has the wrong size");
}

PathBatch coarsen(const PathBatch& paths, std::size_t factor) {
  const std::size_t N = paths.grid().steps();
  require(factor >= 1 && N % factor == 0, "stochastic_core.coarsen", "factor must divide the step count");
  const std::size_t row = paths.paths() * paths.dim(), n = N / factor;
  std::vector<double> values((n + 1) * row);
  auto src = paths.raw();
  for (std::size_t i = 0; i <= n; ++i)
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(i * factor * row), row,
                values.begin() + static_cast<std::ptrdiff_t>(i * row));
  return PathBatch(TimeGrid(paths.grid().horizon(), n), paths.paths(), paths.dim(), paths.seed(), std::move(values));
}

PathBatch gen_brownian(const TimeGrid& grid, std::size_t paths, std::size_t dim, std::uint64_t seed) {
  require(paths >= 1, "stochastic_core.gen_brownian", "path count must be >= 1");
  require(dim >= 1, "stochastic_core.gen_brownian", "Brownian dimension must be >= 1");
  const std::size_t steps = grid.steps();
  const double sqdt = std::sqrt(grid.dt());
  std::vector<double> values((steps + 1) * paths * dim, 0.0);
  parallel_chunks(paths, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t m = b; m < e; ++m) {
      std::mt19937_64 rng(path_key(seed, m));
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t i = 0; i < steps; ++i)
        for (std::size_t j = 0; j < dim; ++j)
          values[((i + 1) * paths + m) * dim + j] = values[(i * paths + m) * dim + j] + sqdt * normal(rng);
    }
  });
  return PathBatch(grid, paths, dim, seed, std::move(values));
}

ProcessPath ProcessPath::constant(std::size_t paths, std::size_t nodes, std::vector<double> value) {
  ProcessPath p;
  p.paths_ = paths;
  p.nodes_ = nodes;
  p.dim_ = value.size();
  p.layout_ = Layout::constant;
  p.values_ = std::move(value);
  return p;
}

ProcessPath ProcessPath::deterministic(std::size_t paths, std::size_t nodes, std::size_t dim,
                                       std::vector<double> per_node) {
  require(per_node.size() == nodes * dim, "stochastic_core.ProcessPath", "deterministic values have the wrong size");
  ProcessPath p;
  p.paths_ = paths;
  p.nodes_ = nodes;
  p.dim_ = dim;
  p.layout_ = Layout::deterministic;
  p.values_ = std::move(per_node);
  return p;
}

ProcessPath ProcessPath::full(std::size_t paths, std::size_t nodes, std::size_t dim, std::vector<double> values) {
  require(values.size() == paths * nodes * dim, "stochastic_core.ProcessPath", "full values have the wrong size");
  ProcessPath p;
  p.paths_ = paths;
  p.nodes_ = nodes;
  p.dim_ = dim;
  p.layout_ = Layout::full;
  p.values_ = std::move(values);
  return p;
}

ProcessPath ProcessPath::zeros(std::size_t paths, std::size_t nodes, std::size_t dim) {
  return constant(paths, nodes, std::vector<double>(dim, 0.0));
}

std::vector<double> ProcessPath::node(std::size_t i, std::size_t j) const {
  std::vector<double> out(paths_);
  for (std::size_t m = 0; m < paths_; ++m) out[m] = (*this)(m, i, j);
  return out;
}

ProcessPath log_stochastic_exponential(const ProcessPath& q, const PathBatch& paths) {
  check_shape(q, paths, "stochastic_core.stochastic_exponential");
  const std::size_t steps = paths.grid().steps();
  const std::size_t n = paths.paths();
  const std::size_t d = paths.dim();
  const double dt = paths.grid().dt();
  std::vector<double> out((steps + 1) * n, 0.0);
  parallel_chunks(n, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t m = b; m < e; ++m) {
      double acc = 0.0;
      for (std::size_t i = 0; i < steps; ++i) {
        double qdw = 0.0;
        double qq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double qj = q(m, i, j);
          qdw += qj * paths.dw(m, i, j);
          qq += qj * qj;
        }
        acc += qdw - 0.5 * qq * dt;
        out[(i + 1) * n + m] = acc;
      }
    }
  });
  return ProcessPath::full(n, steps + 1, 1, std::move(out));
}

ProcessPath stochastic_exponential(const ProcessPath& q, const PathBatch& paths) {
  ProcessPath log_path = log_stochastic_exponential(q, paths);
  for (double& v : log_path.storage()) v = std::exp(v);
  return log_path;
}

ProcessPath girsanov_weight(const ProcessPath& q, const PathBatch& paths) {
  ProcessPath log_path = log_stochastic_exponential(q, paths);
  for (double& v : log_path.storage()) {
    v = std::exp(v);
    if (!std::isfinite(v) || v <= 0.0)
      fail(ErrorKind::numeric_overflow, "stochastic_core.girsanov_weight", "density is not finite and positive");
  }
  return log_path;
}

MuckenhouptEstimate check_muckenhoupt(const ProcessPath& theta, double p, std::size_t tau_index,
                                      const PathBatch& paths) {
  constexpr const char* where = "stochastic_core.check_muckenhoupt";
  require(std::isfinite(p) && p > 1.0, where, "p must be > 1");
  check_shape(theta, paths, where);
  const std::size_t steps = paths.grid().steps();
  require(tau_index <= steps, where, "tau index beyond the grid");
  const std::size_t n = paths.paths();
  const std::size_t d = paths.dim();
  const double dt = paths.grid().dt();
  const double a = 1.0 / (p - 1.0);

  // (E_tau / E_T)^a = exp(a * (-int_tau^T theta dW + 1/2 int_tau^T |theta|^2 du))
  std::vector<double> ratio(n);
  parallel_chunks(n, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t m = b; m < e; ++m) {
      double acc = 0.0;
      for (std::size_t i = tau_index; i < steps; ++i) {
        double tdw = 0.0;
        double tt = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double th = theta(m, i, j);
          tdw += th * paths.dw(m, i, j);
          tt += th * th;
        }
        acc += -tdw + 0.5 * tt * dt;
      }
      ratio[m] = std::exp(a * acc);
    }
  });

  MuckenhouptEstimate out;
  out.tau_index = tau_index;
  out.exponent = a;
  const MeanEstimate est = mean_and_se(ratio);
  out.estimate = est.mean;
  out.std_error = est.std_error;

  if (theta.layout() == Layout::constant) {
    double tt = 0.0;
    for (std::size_t j = 0; j < d; ++j) tt += theta(0, 0, j) * theta(0, 0, j);
    const double remaining = paths.grid().horizon() - paths.grid().time(tau_index);
    out.analytic = std::exp(0.5 * a * (a + 1.0) * tt * remaining);
  } else if (tau_index > 0) {
    RegressionBasis basis;
    basis.degree = 2;
    basis.state = StateKind::brownian;
    std::vector<double> state(n);
    for (std::size_t m = 0; m < n; ++m) state[m] = paths.w(m, tau_index, 0);
    ConditionalExpectation ce(basis, state);
    const std::vector<double> fit = ce.project(ratio);
    double worst = fit.front();
    for (double v : fit) worst = std::max(worst, v);
    out.worst_conditional = worst;
  } else {
    out.worst_conditional = out.estimate;
  }
  return out;
}

}  // namespace rbu
