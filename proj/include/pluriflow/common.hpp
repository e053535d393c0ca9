#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace pluriflow {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two fields that must share a chart were built on different grids.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

/// Index kinds, ranges or directions do not fit the operation.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

/// A Hermitian metric lost positivity (smallest eigenvalue below threshold).
class DegenerateMetricError : public Error {
 public:
  using Error::Error;
};

/// The grid cannot resolve the requested ball or cutoff.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// (g, beta) does not satisfy the torsion-potential relation within tolerance.
class IncompatiblePairError : public Error {
 public:
  using Error::Error;
};

/// Time integration stopped: positivity loss or compatibility drift.
class FlowAbort : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SnapshotError : public Error {
 public:
  using Error::Error;
};

/// Applies PLURIFLOW_THREADS (if set) to the OpenMP runtime. Idempotent.
void configure_threads();

}  // namespace pluriflow
