#pragma once

#include <stdexcept>
#include <string>

namespace mklpo {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: parse failures, invalid labels, dimension mismatches,
/// schema violations in model documents.
class DataError : public Error {
  public:
    using Error::Error;
};

/// Numerical failure inside training (indefinite QP, iteration cap).
class SolverError : public Error {
  public:
    using Error::Error;
};

/// Raised by the loss-augmented oracles when every admissible labeling is
/// excluded. The trainer treats it as convergence.
class OracleExhausted : public Error {
  public:
    using Error::Error;
};

}  // namespace mklpo
