#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rbu {

class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  double dt() const noexcept { return dt_; }
  double time(std::size_t i) const noexcept {
    return i >= steps_ ? horizon_ : static_cast<double>(i) * dt_;
  }

 private:
  double horizon_;
  std::size_t steps_;
  double dt_;
};

// Brownian values W[m][i][j] on a uniform grid. Storage is time-major so the
// backward loops can sweep all paths at one node contiguously.
class PathBatch {
 public:
  PathBatch(TimeGrid grid, std::size_t paths, std::size_t dim, std::uint64_t seed,
            std::vector<double> values);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t paths() const noexcept { return paths_; }
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double w(std::size_t m, std::size_t i, std::size_t j = 0) const noexcept {
    return values_[(i * paths_ + m) * dim_ + j];
  }
  double dw(std::size_t m, std::size_t i, std::size_t j = 0) const noexcept {
    return w(m, i + 1, j) - w(m, i, j);
  }
  std::span<const double> raw() const noexcept { return values_; }

 private:
  TimeGrid grid_;
  std::size_t paths_;
  std::size_t dim_;
  std::uint64_t seed_;
  std::vector<double> values_;
};

PathBatch gen_brownian(const TimeGrid& grid, std::size_t paths, std::size_t dim, std::uint64_t seed);

// Same paths on every factor-th node.
PathBatch coarsen(const PathBatch& paths, std::size_t factor);

enum class Layout { constant, deterministic, full };

// A scalar or vector process sampled on grid nodes. Constant and
// deterministic layouts broadcast across paths (and time) without storing a
// full array, which keeps constant model families cheap.
class ProcessPath {
 public:
  ProcessPath() = default;

  static ProcessPath constant(std::size_t paths, std::size_t nodes, std::vector<double> value);
  static ProcessPath deterministic(std::size_t paths, std::size_t nodes, std::size_t dim,
                                   std::vector<double> per_node);
  static ProcessPath full(std::size_t paths, std::size_t nodes, std::size_t dim,
                          std::vector<double> values);
  static ProcessPath zeros(std::size_t paths, std::size_t nodes, std::size_t dim);

  std::size_t paths() const noexcept { return paths_; }
  std::size_t nodes() const noexcept { return nodes_; }
  std::size_t dim() const noexcept { return dim_; }
  Layout layout() const noexcept { return layout_; }
  bool predictable() const noexcept { return predictable_; }
  void set_predictable(bool p) noexcept { predictable_ = p; }

  double operator()(std::size_t m, std::size_t i, std::size_t j = 0) const noexcept {
    switch (layout_) {
      case Layout::constant: return values_[j];
      case Layout::deterministic: return values_[i * dim_ + j];
      case Layout::full: break;
    }
    return values_[(i * paths_ + m) * dim_ + j];
  }

  // Mutable access; only valid for the full layout.
  double& at(std::size_t m, std::size_t i, std::size_t j = 0) noexcept {
    return values_[(i * paths_ + m) * dim_ + j];
  }

  std::span<const double> raw() const noexcept { return values_; }
  std::vector<double>& storage() noexcept { return values_; }

  // Values of every path at node i for component j.
  std::vector<double> node(std::size_t i, std::size_t j = 0) const;

 private:
  std::size_t paths_ = 0;
  std::size_t nodes_ = 0;
  std::size_t dim_ = 0;
  Layout layout_ = Layout::constant;
  bool predictable_ = true;
  std::vector<double> values_;
};

// log E(int q dW) on every node, left-point integrals.
ProcessPath log_stochastic_exponential(const ProcessPath& q, const PathBatch& paths);

ProcessPath stochastic_exponential(const ProcessPath& q, const PathBatch& paths);

// Running density dQ^q/dP; throws numeric_overflow when a weight is not finite.
ProcessPath girsanov_weight(const ProcessPath& q, const PathBatch& paths);

struct MuckenhouptEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t tau_index = 0;
  double exponent = 0.0;               // 1/(p-1)
  std::optional<double> analytic;      // lognormal closed form for constant theta
  std::optional<double> worst_conditional;  // max fitted conditional value, adapted theta
  bool deterministic_times_only = true;
};

MuckenhouptEstimate check_muckenhoupt(const ProcessPath& theta, double p, std::size_t tau_index,
                                      const PathBatch& paths);

}  // namespace rbu
