#pragma once

#include <stdexcept>
#include <string>

namespace perihom {

enum class ErrorKind {
  degenerate_lattice,
  non_elliptic,
  invalid_coefficient,
  component_mismatch,
  solver_failure,
  out_of_support,
  invalid_kernel,
  configuration,
  empty_subdomain,
  fit_error,
  io_error,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a machine-readable kind so the
// CLI can emit it as JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& message, int iterations, double residual)
      : Error(ErrorKind::solver_failure, message),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, std::string key = {}, int line = 0)
      : Error(ErrorKind::configuration, message), key_(std::move(key)), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

}  // namespace perihom
