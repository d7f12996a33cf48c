#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace invopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A feasible-set oracle cannot serve the request (wrong kind, cap exceeded,
/// unsupported budget, unbounded inner problem).
class OracleError : public Error {
 public:
  using Error::Error;
};

/// The training data admits no nonzero consistent cost vector.
class InconsistentDataError : public Error {
 public:
  InconsistentDataError() : Error("inconsistent data") {}
  explicit InconsistentDataError(const std::string& what) : Error(what) {}
};

/// The consistent cone has an empty interior (or it misses Theta).
class NoInteriorError : public Error {
 public:
  NoInteriorError() : Error("no strict interior") {}
  explicit NoInteriorError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Solver breakdown. Carries the tail of the pivot log for triage.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<std::string> log = {})
      : Error(what), pivot_log(std::move(log)) {}
  std::vector<std::string> pivot_log;
};

}  // namespace invopt
