#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rbu/stochastic.hpp"

namespace rbu {

// Constant-coefficient market: n stocks driven by a d-dimensional Brownian
// motion, n <= d. theta = sigma' (sigma sigma')^{-1} mu.
struct MarketParams {
  std::vector<double> mu;     // n
  std::vector<double> sigma;  // n x d, row-major
  std::vector<double> theta;  // d
  double x0 = 1.0;
  double condition_number = 1.0;
  std::size_t n = 0;
  std::size_t d = 0;

  static MarketParams make(std::vector<double> mu, std::vector<double> sigma, std::size_t d, double x0);

  double sigma_at(std::size_t i, std::size_t j) const { return sigma[i * d + j]; }
  ProcessPath theta_path(const PathBatch& paths) const;
};

enum class StrategyKind { constant_amount, constant_fraction, feedback_table, fraction_process };
enum class WealthScheme { exact_lognormal, euler };

// Amounts per stock as a function of (t, X), bilinear in both.
struct FeedbackTable {
  std::vector<double> times;
  std::vector<double> wealth;
  std::vector<double> amounts;  // [time][wealth][stock]

  std::vector<double> lookup(double t, double x, std::size_t stocks) const;
};

class Strategy {
 public:
  static Strategy amount(std::vector<double> a);
  static Strategy fraction(std::vector<double> f);
  static Strategy feedback(FeedbackTable table, std::size_t stocks);
  static Strategy from_fraction_process(ProcessPath pi_tilde, WealthScheme scheme);

  StrategyKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<double>& params() const noexcept { return params_; }
  const FeedbackTable& table() const noexcept { return table_; }
  const ProcessPath& fraction_path() const noexcept { return fraction_path_; }
  WealthScheme scheme() const noexcept;

  std::string describe() const;

 private:
  StrategyKind kind_ = StrategyKind::constant_fraction;
  std::size_t dim_ = 0;
  std::vector<double> params_;
  FeedbackTable table_;
  ProcessPath fraction_path_;
  WealthScheme fraction_scheme_ = WealthScheme::exact_lognormal;
};

struct WealthPath {
  ProcessPath x;   // nodes N+1, scalar
  ProcessPath nu;  // pi sigma per step, nodes N, dim d
  WealthScheme scheme = WealthScheme::exact_lognormal;
  std::size_t absorbed_nodes = 0;

  std::vector<double> terminal() const { return x.node(x.nodes() - 1); }
};

WealthPath simulate_wealth(const Strategy& strategy, const MarketParams& market, const PathBatch& paths);

struct FractionProcess {
  ProcessPath pi_tilde;        // nodes N, dim n
  std::size_t flagged_nodes = 0;  // absorbed nodes where pi_tilde was set to 0
};

FractionProcess to_fraction_process(const Strategy& strategy, const WealthPath& wealth, const MarketParams& market,
                                    const PathBatch& paths);

// Price of stock i on every node, S_0 = 1; used for strategy-independent endowments.
std::vector<double> stock_terminal(const MarketParams& market, const PathBatch& paths, std::size_t stock);

}  // namespace rbu
