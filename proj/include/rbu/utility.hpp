#pragma once

#include <string>

namespace rbu {

enum class UtilityKind { log, power, exponential };

// Concave increasing utility on the positive half-line.
class Utility {
 public:
  static Utility log();
  static Utility power(double r);        // x^r, 0 < r < 1
  static Utility exponential(double r);  // -exp(-r x), r > 0

  UtilityKind kind() const noexcept { return kind_; }
  double r() const noexcept { return r_; }
  std::string name() const;

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
  double inverse(double v) const;

  // -u''/u'; the certainty-equivalent generator is half of this times |z|^2.
  double absolute_risk_aversion(double x) const;

  // Strict lower bound of the domain (x must exceed it for log and power).
  bool strict_domain() const noexcept { return kind_ != UtilityKind::exponential; }
  bool in_domain(double x) const noexcept { return strict_domain() ? x > 0.0 : x >= 0.0; }

  // Largest p with r p^2 < 1 for power utility; infinity otherwise.
  double max_muckenhoupt_p() const;

 private:
  Utility(UtilityKind kind, double r) : kind_(kind), r_(r) {}
  UtilityKind kind_;
  double r_;
};

}  // namespace rbu
