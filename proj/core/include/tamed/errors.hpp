#pragma once

#include <stdexcept>
#include <string>

namespace tamed {

// Invalid user-facing configuration: unknown names, bad parameters, guards.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An argument lies outside the domain of an operation (level > level_max, t > T, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A requested scheme cannot be applied to the given problem.
class UnsupportedScheme : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on the problem structure does not hold.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A tamed scheme produced more diverged paths than the tolerated fraction.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tamed
