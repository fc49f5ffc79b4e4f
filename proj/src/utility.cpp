#include "rbu/utility.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "rbu/error.hpp"

namespace rbu {

Utility Utility::log() { return Utility(UtilityKind::log, 0.0); }

Utility Utility::power(double r) {
  require(std::isfinite(r) && r > 0.0 && r < 1.0, "generators.Utility", "power utility needs 0 < r < 1");
  return Utility(UtilityKind::power, r);
}

Utility Utility::exponential(double r) {
  require(std::isfinite(r) && r > 0.0, "generators.Utility", "exponential utility needs r > 0");
  return Utility(UtilityKind::exponential, r);
}

std::string Utility::name() const {
  std::ostringstream os;
  switch (kind_) {
    case UtilityKind::log: return "log";
    case UtilityKind::power: os << "power(" << r_ << ")"; break;
    case UtilityKind::exponential: os << "exponential(" << r_ << ")"; break;
  }
  return os.str();
}

double Utility::value(double x) const {
  switch (kind_) {
    case UtilityKind::log: return std::log(x);
    case UtilityKind::power: return std::pow(x, r_);
    case UtilityKind::exponential: return -std::exp(-r_ * x);
  }
  return 0.0;
}

double Utility::derivative(double x) const {
  switch (kind_) {
    case UtilityKind::log: return 1.0 / x;
    case UtilityKind::power: return r_ * std::pow(x, r_ - 1.0);
    case UtilityKind::exponential: return r_ * std::exp(-r_ * x);
  }
  return 0.0;
}

double Utility::second_derivative(double x) const {
  switch (kind_) {
    case UtilityKind::log: return -1.0 / (x * x);
    case UtilityKind::power: return r_ * (r_ - 1.0) * std::pow(x, r_ - 2.0);
    case UtilityKind::exponential: return -r_ * r_ * std::exp(-r_ * x);
  }
  return 0.0;
}

double Utility::inverse(double v) const {
  switch (kind_) {
    case UtilityKind::log: return std::exp(v);
    case UtilityKind::power: return v > 0.0 ? std::pow(v, 1.0 / r_) : 0.0;
    case UtilityKind::exponential:
      return v < 0.0 ? -std::log(-v) / r_ : std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double Utility::absolute_risk_aversion(double x) const {
  switch (kind_) {
    case UtilityKind::log: return 1.0 / x;
    case UtilityKind::power: return (1.0 - r_) / x;
    case UtilityKind::exponential: return r_;
  }
  return 0.0;
}

double Utility::max_muckenhoupt_p() const {
  if (kind_ == UtilityKind::power) return 1.0 / std::sqrt(r_);
  return std::numeric_limits<double>::infinity();
}

}  // namespace rbu
