#pragma once

#include <stdexcept>
#include <string>

namespace rbu {

enum class ErrorKind {
  invalid_argument,
  numeric_overflow,
  domain_violation,
  infeasible_model,
  nonsmooth_point,
  config,
  numerical,
};

const char* to_string(ErrorKind kind) noexcept;

// Every library failure carries the module.operation that raised it so the
// CLI can report where a numerical run broke down.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string where, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& where() const noexcept { return where_; }

 private:
  ErrorKind kind_;
  std::string where_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& where, const std::string& message);

inline void require(bool condition, const char* where, const std::string& message) {
  if (!condition) fail(ErrorKind::invalid_argument, where, message);
}

}  // namespace rbu
