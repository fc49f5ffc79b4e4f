#include "rbu/market.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rbu/error.hpp"
#include "rbu/parallel.hpp"

namespace rbu {

MarketParams MarketParams::make(std::vector<double> mu, std::vector<double> sigma, std::size_t d, double x0) {
  constexpr const char* where = "market.MarketParams";
  const std::size_t n = mu.size();
  require(n >= 1, where, "at least one stock is required");
  require(d >= n, where, "the Brownian dimension must be >= the number of stocks");
  require(sigma.size() == n * d, where, "sigma must be n x d");
  require(std::isfinite(x0) && x0 > 0.0, where, "initial capital must be > 0");
  for (double v : mu) require(std::isfinite(v), where, "drift must be finite");
  for (double v : sigma) require(std::isfinite(v), where, "volatility must be finite");

  Eigen::MatrixXd s(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) s(i, j) = sigma[i * d + j];
  const Eigen::MatrixXd ss = s * s.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ss);
  const auto sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  require(smin > 1e-14 * std::max(1.0, smax), where, "sigma sigma' is singular");
  Eigen::VectorXd m(n);
  for (std::size_t i = 0; i < n; ++i) m(i) = mu[i];
  const Eigen::VectorXd th = s.transpose() * ss.ldlt().solve(m);

  MarketParams out;
  out.mu = std::move(mu);
  out.sigma = std::move(sigma);
  out.theta.assign(th.data(), th.data() + d);
  out.x0 = x0;
  out.condition_number = smax / smin;
  out.n = n;
  out.d = d;
  return out;
}

ProcessPath MarketParams::theta_path(const PathBatch& paths) const {
  return ProcessPath::constant(paths.paths(), paths.grid().steps() + 1, theta);
}

std::vector<double> FeedbackTable::lookup(double t, double x, std::size_t stocks) const {
  const std::size_t nt = times.size();
  const std::size_t nx = wealth.size();
  auto bracket = [](const std::vector<double>& axis, double v, std::size_t& lo, double& w) {
    if (axis.size() == 1 || v <= axis.front()) {
      lo = 0;
      w = 0.0;
      return;
    }
    if (v >= axis.back()) {
      lo = axis.size() - 2;
      w = 1.0;
      return;
    }
    const auto it = std::upper_bound(axis.begin(), axis.end(), v);
    lo = static_cast<std::size_t>(it - axis.begin()) - 1;
    w = (v - axis[lo]) / (axis[lo + 1] - axis[lo]);
  };
  std::size_t it0 = 0, ix0 = 0;
  double wt = 0.0, wx = 0.0;
  bracket(times, t, it0, wt);
  bracket(wealth, x, ix0, wx);
  const std::size_t it1 = std::min(it0 + 1, nt - 1);
  const std::size_t ix1 = std::min(ix0 + 1, nx - 1);
  std::vector<double> out(stocks);
  auto at = [&](std::size_t a, std::size_t b, std::size_t k) { return amounts[(a * nx + b) * stocks + k]; };
  for (std::size_t k = 0; k < stocks; ++k) {
    out[k] = (1 - wt) * ((1 - wx) * at(it0, ix0, k) + wx * at(it0, ix1, k)) +
             wt * ((1 - wx) * at(it1, ix0, k) + wx * at(it1, ix1, k));
  }
  return out;
}

Strategy Strategy::amount(std::vector<double> a) {
  Strategy s;
  s.kind_ = StrategyKind::constant_amount;
  s.dim_ = a.size();
  s.params_ = std::move(a);
  return s;
}

Strategy Strategy::fraction(std::vector<double> f) {
  Strategy s;
  s.kind_ = StrategyKind::constant_fraction;
  s.dim_ = f.size();
  s.params_ = std::move(f);
  return s;
}

Strategy Strategy::feedback(FeedbackTable table, std::size_t stocks) {
  require(!table.times.empty() && !table.wealth.empty(), "market.Strategy", "feedback table axes are empty");
  require(std::is_sorted(table.times.begin(), table.times.end()) &&
              std::is_sorted(table.wealth.begin(), table.wealth.end()),
          "market.Strategy", "feedback table axes must be increasing");
  require(table.amounts.size() == table.times.size() * table.wealth.size() * stocks, "market.Strategy",
          "feedback table has the wrong number of entries");
  Strategy s;
  s.kind_ = StrategyKind::feedback_table;
  s.dim_ = stocks;
  s.table_ = std::move(table);
  return s;
}

Strategy Strategy::from_fraction_process(ProcessPath pi_tilde, WealthScheme scheme) {
  Strategy s;
  s.kind_ = StrategyKind::fraction_process;
  s.dim_ = pi_tilde.dim();
  s.fraction_path_ = std::move(pi_tilde);
  s.fraction_scheme_ = scheme;
  return s;
}

WealthScheme Strategy::scheme() const noexcept {
  switch (kind_) {
    case StrategyKind::constant_fraction: return WealthScheme::exact_lognormal;
    case StrategyKind::fraction_process: return fraction_scheme_;
    default: return WealthScheme::euler;
  }
}

std::string Strategy::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case StrategyKind::constant_amount: os << "amount"; break;
    case StrategyKind::constant_fraction: os << "fraction"; break;
    case StrategyKind::feedback_table: return "feedback-table";
    case StrategyKind::fraction_process: return "fraction-process";
  }
  os << "[";
  for (std::size_t k = 0; k < params_.size(); ++k) os << (k ? "," : "") << params_[k];
  os << "]";
  return os.str();
}

WealthPath simulate_wealth(const Strategy& strategy, const MarketParams& market, const PathBatch& paths) {
  constexpr const char* where = "market.simulate_wealth";
  require(strategy.dim() == market.n, where, "strategy dimension differs from the number of stocks");
  require(paths.dim() == market.d, where, "path dimension differs from the market's Brownian dimension");
  const std::size_t steps = paths.grid().steps();
  const std::size_t n_paths = paths.paths();
  const std::size_t n = market.n;
  const std::size_t d = market.d;
  const double dt = paths.grid().dt();
  if (strategy.kind() == StrategyKind::fraction_process) {
    const auto& f = strategy.fraction_path();
    require(f.paths() == n_paths && f.nodes() >= steps && f.dim() == n, where,
            "fraction process shape does not match the path batch");
  }

  WealthPath out;
  out.scheme = strategy.scheme();
  std::vector<double> x((steps + 1) * n_paths);
  std::vector<double> nu(steps * n_paths * d);
  std::vector<std::size_t> absorbed(chunk_count(n_paths), 0);

  parallel_chunks(n_paths, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> pi(n);      // amounts or fractions, per stock
    std::vector<double> psig(d);    // pi sigma
    for (std::size_t m = b; m < e; ++m) {
      double xm = market.x0;
      x[m] = xm;
      for (std::size_t i = 0; i < steps; ++i) {
        const bool is_fraction = out.scheme == WealthScheme::exact_lognormal ||
                                 strategy.kind() == StrategyKind::fraction_process;
        switch (strategy.kind()) {
          case StrategyKind::constant_amount:
          case StrategyKind::constant_fraction:
            pi = strategy.params();
            break;
          case StrategyKind::feedback_table:
            pi = strategy.table().lookup(paths.grid().time(i), xm, n);
            break;
          case StrategyKind::fraction_process:
            for (std::size_t k = 0; k < n; ++k) pi[k] = strategy.fraction_path()(m, i, k);
            break;
        }
        double drift = 0.0;
        for (std::size_t k = 0; k < n; ++k) drift += pi[k] * market.mu[k];
        double var = 0.0;
        double noise = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          double v = 0.0;
          for (std::size_t k = 0; k < n; ++k) v += pi[k] * market.sigma[k * d + j];
          psig[j] = v;
          var += v * v;
          noise += v * paths.dw(m, i, j);
        }
        double next;
        if (out.scheme == WealthScheme::exact_lognormal) {
          next = xm * std::exp((drift - 0.5 * var) * dt + noise);
          for (std::size_t j = 0; j < d; ++j) nu[(i * n_paths + m) * d + j] = psig[j] * xm;
        } else if (is_fraction) {
          // Euler on the fraction form dX = X pi~ sigma (theta dt + dW).
          if (xm <= 0.0) {
            next = 0.0;
            for (std::size_t j = 0; j < d; ++j) nu[(i * n_paths + m) * d + j] = 0.0;
            ++absorbed[c];
          } else {
            next = xm + xm * (drift * dt + noise);
            for (std::size_t j = 0; j < d; ++j) nu[(i * n_paths + m) * d + j] = psig[j] * xm;
          }
        } else {
          if (xm <= 0.0) {
            next = 0.0;
            for (std::size_t j = 0; j < d; ++j) nu[(i * n_paths + m) * d + j] = 0.0;
            ++absorbed[c];
          } else {
            next = xm + drift * dt + noise;
            for (std::size_t j = 0; j < d; ++j) nu[(i * n_paths + m) * d + j] = psig[j];
          }
        }
        if (next < 0.0) next = 0.0;
        xm = next;
        x[(i + 1) * n_paths + m] = xm;
      }
    }
  });
  for (std::size_t a : absorbed) out.absorbed_nodes += a;
  out.x = ProcessPath::full(n_paths, steps + 1, 1, std::move(x));
  out.nu = ProcessPath::full(n_paths, steps, d, std::move(nu));
  return out;
}

FractionProcess to_fraction_process(const Strategy& strategy, const WealthPath& wealth, const MarketParams& market,
                                    const PathBatch& paths) {
  constexpr const char* where = "market.to_fraction_process";
  require(strategy.dim() == market.n, where, "strategy dimension differs from the number of stocks");
  require(wealth.x.paths() == paths.paths() && wealth.x.nodes() == paths.grid().steps() + 1, where,
          "wealth path does not match the path batch");
  const std::size_t steps = paths.grid().steps();
  const std::size_t n_paths = paths.paths();
  const std::size_t n = market.n;

  FractionProcess out;
  if (strategy.kind() == StrategyKind::constant_fraction) {
    out.pi_tilde = ProcessPath::constant(n_paths, steps, strategy.params());
    return out;
  }
  if (strategy.kind() == StrategyKind::fraction_process) {
    out.pi_tilde = strategy.fraction_path();
    return out;
  }
  std::vector<double> f(steps * n_paths * n, 0.0);
  std::vector<std::size_t> flagged(chunk_count(n_paths), 0);
  parallel_chunks(n_paths, [&](std::size_t c, std::size_t b, std::size_t e) {
    for (std::size_t m = b; m < e; ++m)
      for (std::size_t i = 0; i < steps; ++i) {
        const double xm = wealth.x(m, i);
        if (xm <= 0.0) {
          ++flagged[c];
          continue;
        }
        std::vector<double> pi = strategy.kind() == StrategyKind::constant_amount
                                     ? strategy.params()
                                     : strategy.table().lookup(paths.grid().time(i), xm, n);
        for (std::size_t k = 0; k < n; ++k) f[(i * n_paths + m) * n + k] = pi[k] / xm;
      }
  });
  for (std::size_t v : flagged) out.flagged_nodes += v;
  out.pi_tilde = ProcessPath::full(n_paths, steps, n, std::move(f));
  return out;
}

std::vector<double> stock_terminal(const MarketParams& market, const PathBatch& paths, std::size_t stock) {
  require(stock < market.n, "market.stock_terminal", "stock index out of range");
  const std::size_t steps = paths.grid().steps();
  const double horizon = paths.grid().horizon();
  double var = 0.0;
  for (std::size_t j = 0; j < market.d; ++j) var += market.sigma_at(stock, j) * market.sigma_at(stock, j);
  std::vector<double> out(paths.paths());
  for (std::size_t m = 0; m < paths.paths(); ++m) {
    double noise = 0.0;
    for (std::size_t j = 0; j < market.d; ++j) noise += market.sigma_at(stock, j) * paths.w(m, steps, j);
    out[m] = std::exp((market.mu[stock] - 0.5 * var) * horizon + noise);
  }
  return out;
}

}  // namespace rbu
