#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbu/utility.hpp"

namespace rbu {

struct Point {
  double y = 0.0;
  std::vector<double> z;
};

// Value of g*(beta, q). Infinite values are tagged, never encoded as a large float.
struct ConjugateValue {
  bool finite = true;
  double value = 0.0;
  std::optional<Point> argmax;
  bool analytic = false;

  static ConjugateValue infinite(bool analytic) { return {false, 0.0, std::nullopt, analytic}; }
};

struct Subgradient {
  double beta = 0.0;
  std::vector<double> q;
  bool analytic = true;
};

struct GeneratorFlags {
  bool conv = false;
  bool lsc = false;
  bool nor = false;
  bool pos = false;
  bool adm = false;
  bool qg = false;
};

enum class GeneratorKind { zero, quadratic, ratio_quadratic, norm, certainty_equivalent, g_expectation, custom };

// Time-homogeneous generator g(y, z) on R_+ x R^d.
class Generator {
 public:
  using EvalFn = std::function<double(double, std::span<const double>)>;
  using ConjugateFn = std::function<ConjugateValue(double, std::span<const double>)>;
  using SubgradientFn = std::function<Subgradient(double, std::span<const double>)>;

  Generator(GeneratorKind kind, std::string name, EvalFn eval, bool strict_domain, GeneratorFlags claimed,
            ConjugateFn conjugate = {}, SubgradientFn subgradient = {});

  // g == 0.
  static Generator zero();
  // (c/2)|z|^2.
  static Generator quadratic(double c);
  // (c/2)|z|^2 / y, +inf at y = 0 with z != 0.
  static Generator ratio_quadratic(double c);
  // k |z|.
  static Generator norm(double k);
  static Generator custom(std::string name, EvalFn eval, bool strict_domain, GeneratorFlags claimed);

  double operator()(double y, std::span<const double> z) const { return eval_(y, z); }
  double operator()(double y, std::initializer_list<double> z) const {
    return eval_(y, std::span<const double>(z.begin(), z.size()));
  }

  GeneratorKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  bool strict_domain() const noexcept { return strict_domain_; }
  const GeneratorFlags& claimed() const noexcept { return claimed_; }
  bool has_analytic_conjugate() const noexcept { return static_cast<bool>(conjugate_); }
  bool has_analytic_subgradient() const noexcept { return static_cast<bool>(subgradient_); }

  // Solver floor for y when the domain is the open half-line.
  double y_floor() const noexcept { return strict_domain_ ? 1e-6 : 0.0; }

  const ConjugateFn& analytic_conjugate() const noexcept { return conjugate_; }
  const SubgradientFn& analytic_subgradient() const noexcept { return subgradient_; }

  // Coefficient of the simple families (c for quadratic/ratio, k for norm).
  double coefficient() const noexcept { return coefficient_; }

 private:
  friend Generator make_ce_generator(const Utility&);
  friend Generator transform_g_expectation(const Generator&, const Utility&);

  GeneratorKind kind_;
  std::string name_;
  EvalFn eval_;
  bool strict_domain_;
  GeneratorFlags claimed_;
  ConjugateFn conjugate_;
  SubgradientFn subgradient_;
  double coefficient_ = 0.0;
};

Generator make_ce_generator(const Utility& utility);

// g^(y, z) = g(u(y), z u'(y)) / u'(y) - 1/2 u''(y)/u'(y) |z|^2.
Generator transform_g_expectation(const Generator& base, const Utility& utility);

struct SearchBox {
  double y_lo = 1e-8;
  double y_hi = 100.0;
  double z_max = 200.0;
  std::size_t density = 64;
};

// Analytic conjugate when the generator carries one, brute force otherwise.
ConjugateValue conjugate(const Generator& g, double beta, std::span<const double> q, const SearchBox& box = {});

// Grid supremum with line refinement; +inf when doubling the box grows the
// supremum by at least 1%.
ConjugateValue conjugate_brute_force(const Generator& g, double beta, std::span<const double> q,
                                     const SearchBox& box = {});

// Supremum over one fixed box, no divergence test.
ConjugateValue conjugate_on_box(const Generator& g, double beta, std::span<const double> q, const SearchBox& box);

// Analytic rule where available, symmetric differences where smooth. Throws
// nonsmooth_point when neither applies.
Subgradient subgradient(const Generator& g, double y, std::span<const double> z);

// beta y + q.z - g(y, z) - g*(beta, q); <= 0, zero exactly at subgradients.
double fenchel_young_gap(const Generator& g, double y, std::span<const double> z, double beta,
                         std::span<const double> q, const SearchBox& box = {});

struct SampleGrid {
  double y_lo = 0.1;
  double y_hi = 10.0;
  double z_max = 5.0;
  std::size_t points = 64;
  std::size_t dim = 1;
  std::size_t random_pairs = 4096;
  unsigned long long seed = 7;
};

enum class CheckStatus { pass, fail, skipped };

struct ConditionCheck {
  std::string name;
  bool claimed = false;
  CheckStatus status = CheckStatus::skipped;
  Point worst_point;
  double worst_value = 0.0;
  std::string note;
};

struct ConditionReport {
  std::vector<ConditionCheck> checks;
  double adm_equality_residual = 0.0;  // max |u'g + 1/2 u'' |z|^2|
  double qg_bound_on_box = 0.0;        // sup g/(1+|y|+|z|^2) on the sample box

  const ConditionCheck& at(const std::string& name) const;
};

const char* to_string(CheckStatus status);

ConditionReport verify_conditions(const Generator& g, const Utility* utility, const SampleGrid& grid = {});

}  // namespace rbu
