#pragma once

#include <stdexcept>
#include <string>

namespace sphereflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

// Frame requested at (or too close to) coincident or antipodal points.
class DegenerateGeodesic : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

class NonTangent : public Error {
 public:
  using Error::Error;
};

// Integrator step whose geodesic length leaves the trust region.
class StepTooLarge : public Error {
 public:
  using Error::Error;
};

class DegenerateDistance : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sphereflow
