#pragma once

#include <stdexcept>
#include <string>

namespace hflow {

// Base class for every recoverable failure raised by the engine. The CLI maps
// subclasses onto exit codes, so each geometry failure carries its own type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Event lies outside the validity domain of the chart.
class OutOfChart : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class DegenerateSpec : public GeometryError {
 public:
  using GeometryError::GeometryError;
};
class NotAdmissible : public GeometryError {
 public:
  using GeometryError::GeometryError;
};
class DegenerateInducedMetric : public GeometryError {
 public:
  using GeometryError::GeometryError;
};
class NotNormal : public GeometryError {
 public:
  using GeometryError::GeometryError;
};
class AmbiguousTopology : public GeometryError {
 public:
  using GeometryError::GeometryError;
};
class TopologyMismatch : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class Incompatible : public Error {
 public:
  using Error::Error;
};
class NoConvergence : public Error {
 public:
  using Error::Error;
};

class BetaOutOfRange : public Error {
 public:
  using Error::Error;
};
class ThetaNotMonotone : public Error {
 public:
  using Error::Error;
};
class StepFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace hflow
