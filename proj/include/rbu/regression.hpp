#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rbu {

enum class BasisKind { polynomial, bins };
enum class StateKind { wealth, brownian };

struct RegressionBasis {
  BasisKind kind = BasisKind::polynomial;
  std::size_t degree = 4;
  std::size_t bins = 16;
  StateKind state = StateKind::wealth;
  std::size_t component = 0;  // Brownian component when state == brownian
};

std::string to_string(BasisKind kind);
std::string to_string(StateKind kind);

// Least-squares projection onto functions of a scalar state at one grid node.
// The state is standardized before the monomials are formed; a degenerate
// state (every path equal, e.g. t = 0) collapses the basis to the constant.
class ConditionalExpectation {
 public:
  ConditionalExpectation(const RegressionBasis& basis, std::span<const double> state);

  std::size_t size() const noexcept { return state_.size(); }
  const std::vector<double>& state() const noexcept { return state_; }
  std::size_t columns() const noexcept { return columns_; }
  bool regularized() const noexcept { return regularized_; }

  // Fitted values of E[target | state] at every sample.
  std::vector<double> project(std::span<const double> target) const;

  // Same projection, with a per-sample weight multiplying the target.
  std::vector<double> project_weighted(std::span<const double> target, std::span<const double> weight) const;

  std::vector<double> coefficients(std::span<const double> target) const;
  double evaluate(const std::vector<double>& coefficients, double state) const;

 private:
  void features(double state, double* out) const;
  std::vector<double> solve(std::vector<double> rhs) const;
  std::vector<double> fitted(const std::vector<double>& coef) const;

  BasisKind kind_;
  std::size_t columns_ = 1;
  std::vector<double> state_;
  double center_ = 0.0;
  double scale_ = 1.0;
  double lo_ = 0.0;
  double width_ = 1.0;
  std::vector<double> factor_;  // Cholesky factor of the normal matrix (row-major lower)
  std::vector<double> bin_counts_;
  bool regularized_ = false;
};

}  // namespace rbu
