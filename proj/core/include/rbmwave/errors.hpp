#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rbmwave {

/// Malformed graph structure: bad vertex index, self-loop, disconnected graph.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument to an operation (grid mismatch, K = 0, negative time).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Subset scheme violates the sampling requirements (sum of p, pi_e = 0).
class SchemeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration or network document failed schema validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A relative error was requested against a reference of norm zero.
class UndefinedRelativeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Linear solve or optimizer failure.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::size_t step = 0)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace rbmwave
