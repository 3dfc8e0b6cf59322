#ifndef CELLSIM_COMMON_ERRORS_H_
#define CELLSIM_COMMON_ERRORS_H_

#include <stdexcept>
#include <string>

namespace cellsim {

// Unknown node, task or profile identifier.
class LookupError : public std::out_of_range {
 public:
  explicit LookupError(const std::string& what) : std::out_of_range(what) {}
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Malformed configuration file or flag combination.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable or unusable trace input.
class TraceError : public std::runtime_error {
 public:
  explicit TraceError(const std::string& what) : std::runtime_error(what) {}
};

// No feasible placement exists (or none was found within the iteration cap).
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace cellsim

#endif  // CELLSIM_COMMON_ERRORS_H_
