#pragma once

#include <stdexcept>
#include <string>

namespace disco {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CSV rows, panel cells).
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or command-line usage.
class UsageError : public Error {
 public:
  using Error::Error;
};

// A numerical routine failed to reach a solution.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double kkt_residual = 0.0)
      : Error(what), kkt_residual_(kkt_residual) {}

  double kkt_residual() const noexcept { return kkt_residual_; }

 private:
  double kkt_residual_;
};

}  // namespace disco
