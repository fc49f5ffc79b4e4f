#include "rbu/error.hpp"

#include <utility>

namespace rbu {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::numeric_overflow: return "numeric-overflow";
    case ErrorKind::domain_violation: return "domain-violation";
    case ErrorKind::infeasible_model: return "infeasible-model";
    case ErrorKind::nonsmooth_point: return "nonsmooth-point";
    case ErrorKind::config: return "config";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string where, const std::string& message)
    : std::runtime_error(where + ": " + to_string(kind) + ": " + message),
      kind_(kind),
      where_(std::move(where)) {}

void fail(ErrorKind kind, const std::string& where, const std::string& message) {
  throw Error(kind, where, message);
}

}  // namespace rbu
