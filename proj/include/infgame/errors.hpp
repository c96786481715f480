#pragma once

#include <stdexcept>
#include <string>

namespace infgame {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain (non-positive risk aversion,
/// non-PD covariance, time outside the horizon, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Adjacency matrix violates the row-stochastic / non-negativity contract.
class NetworkError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unusable input data (price files, sample sets).
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra failure inside the equilibrium solver.
class SolverError : public Error {
 public:
  using Error::Error;
};

class OracleError : public Error {
 public:
  using Error::Error;
};

/// The rational/asymptotic decomposition is undefined for this agent.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace infgame
