#include "rbu/regression.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "rbu/error.hpp"
#include "rbu/parallel.hpp"

namespace rbu {

std::string to_string(BasisKind kind) { return kind == BasisKind::polynomial ? "polynomial" : "bins"; }
std::string to_string(StateKind kind) { return kind == StateKind::wealth ? "wealth" : "brownian"; }

ConditionalExpectation::ConditionalExpectation(const RegressionBasis& basis, std::span<const double> state)
    : kind_(basis.kind), state_(state.begin(), state.end()) {
  require(!state_.empty(), "regression", "empty sample");
  require(basis.degree <= 12, "regression", "polynomial degree above 12 is not supported");
  const std::size_t n = state_.size();
  const double mean = ordered_sum(n, [&](std::size_t m) { return state_[m]; }) / static_cast<double>(n);
  const double var = ordered_sum(n, [&](std::size_t m) {
                       const double d = state_[m] - mean;
                       return d * d;
                     }) / static_cast<double>(n);
  const double sd = std::sqrt(var);
  const bool degenerate = !(sd > 1e-13 * (1.0 + std::abs(mean)));
  center_ = mean;
  scale_ = degenerate ? 1.0 : sd;

  if (kind_ == BasisKind::bins) {
    const auto [mn, mx] = std::minmax_element(state_.begin(), state_.end());
    lo_ = *mn;
    columns_ = degenerate ? 1 : std::max<std::size_t>(1, basis.bins);
    width_ = degenerate ? 1.0 : (*mx - *mn) / static_cast<double>(columns_);
    bin_counts_.assign(columns_, 0.0);
    for (double s : state_) {
      std::size_t b = 0;
      if (columns_ > 1) b = std::min(columns_ - 1, static_cast<std::size_t>((s - lo_) / width_));
      bin_counts_[b] += 1.0;
    }
    for (double c : bin_counts_)
      if (c == 0.0) regularized_ = true;
    return;
  }

  columns_ = degenerate ? 1 : basis.degree + 1;
  const std::size_t k = columns_;
  std::vector<std::vector<double>> partial(chunk_count(n), std::vector<double>(k * k, 0.0));
  parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> phi(k);
    auto& acc = partial[c];
    for (std::size_t m = b; m < e; ++m) {
      features(state_[m], phi.data());
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t q = 0; q <= r; ++q) acc[r * k + q] += phi[r] * phi[q];
    }
  });
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (const auto& acc : partial)
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t q = 0; q <= r; ++q) normal(r, q) += acc[r * k + q];
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t q = 0; q < r; ++q) normal(q, r) = normal(r, q);

  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  const double diag_max = normal.diagonal().maxCoeff();
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const Eigen::MatrixXd l = llt.matrixL();
    const double pivot_min = l.diagonal().minCoeff();
    ok = pivot_min * pivot_min > 1e-12 * diag_max;
  }
  if (!ok) {
    regularized_ = true;
    normal.diagonal().array() += 1e-10 * diag_max + 1e-300;
    llt.compute(normal);
  }
  const Eigen::MatrixXd l = llt.matrixL();
  factor_.assign(k * k, 0.0);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t q = 0; q <= r; ++q) factor_[r * k + q] = l(r, q);
}

void ConditionalExpectation::features(double state, double* out) const {
  const double s = (state - center_) / scale_;
  double v = 1.0;
  for (std::size_t c = 0; c < columns_; ++c) {
    out[c] = v;
    v *= s;
  }
}

std::vector<double> ConditionalExpectation::solve(std::vector<double> rhs) const {
  const std::size_t k = columns_;
  for (std::size_t r = 0; r < k; ++r) {
    double v = rhs[r];
    for (std::size_t q = 0; q < r; ++q) v -= factor_[r * k + q] * rhs[q];
    rhs[r] = v / factor_[r * k + r];
  }
  for (std::size_t r = k; r-- > 0;) {
    double v = rhs[r];
    for (std::size_t q = r + 1; q < k; ++q) v -= factor_[q * k + r] * rhs[q];
    rhs[r] = v / factor_[r * k + r];
  }
  return rhs;
}

std::vector<double> ConditionalExpectation::coefficients(std::span<const double> target) const {
  require(target.size() == state_.size(), "regression", "target size differs from sample size");
  const std::size_t n = state_.size();
  const std::size_t k = columns_;
  std::vector<std::vector<double>> partial(chunk_count(n), std::vector<double>(k, 0.0));

  if (kind_ == BasisKind::bins) {
    parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
      auto& acc = partial[c];
      for (std::size_t m = b; m < e; ++m) {
        std::size_t bin = 0;
        if (k > 1) bin = std::min(k - 1, static_cast<std::size_t>((state_[m] - lo_) / width_));
        acc[bin] += target[m];
      }
    });
    std::vector<double> sums(k, 0.0);
    for (const auto& acc : partial)
      for (std::size_t r = 0; r < k; ++r) sums[r] += acc[r];
    double total = 0.0;
    for (double s : sums) total += s;
    const double overall = total / static_cast<double>(n);
    for (std::size_t r = 0; r < k; ++r) sums[r] = bin_counts_[r] > 0 ? sums[r] / bin_counts_[r] : overall;
    return sums;
  }

  parallel_chunks(n, [&](std::size_t c, std::size_t b, std::size_t e) {
    std::vector<double> phi(k);
    auto& acc = partial[c];
    for (std::size_t m = b; m < e; ++m) {
      features(state_[m], phi.data());
      for (std::size_t r = 0; r < k; ++r) acc[r] += phi[r] * target[m];
    }
  });
  std::vector<double> rhs(k, 0.0);
  for (const auto& acc : partial)
    for (std::size_t r = 0; r < k; ++r) rhs[r] += acc[r];
  return solve(std::move(rhs));
}

double ConditionalExpectation::evaluate(const std::vector<double>& coef, double state) const {
  if (kind_ == BasisKind::bins) {
    std::size_t bin = 0;
    if (columns_ > 1) {
      const double pos = (state - lo_) / width_;
      bin = pos <= 0.0 ? 0 : std::min(columns_ - 1, static_cast<std::size_t>(pos));
    }
    return coef[bin];
  }
  double phi[32];
  features(state, phi);
  double v = 0.0;
  for (std::size_t c = 0; c < columns_; ++c) v += coef[c] * phi[c];
  return v;
}

std::vector<double> ConditionalExpectation::fitted(const std::vector<double>& coef) const {
  std::vector<double> out(state_.size());
  parallel_chunks(state_.size(), [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t m = b; m < e; ++m) out[m] = evaluate(coef, state_[m]);
  });
  return out;
}

std::vector<double> ConditionalExpectation::project(std::span<const double> target) const {
  return fitted(coefficients(target));
}

std::vector<double> ConditionalExpectation::project_weighted(std::span<const double> target,
                                                             std::span<const double> weight) const {
  require(weight.size() == target.size(), "regression", "weight size differs from target size");
  std::vector<double> product(target.size());
  for (std::size_t m = 0; m < target.size(); ++m) product[m] = target[m] * weight[m];
  return project(product);
}

}  // namespace rbu
