#pragma once

#include <stdexcept>
#include <string>

namespace vessel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation outside a function's domain (e.g. spline parameter not in [0,1]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value or count.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Geometric degeneracy: coincident centerline points, frame collapse,
/// zero-area faces, degenerate slices.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Mesh is not watertight / not a closed 2-manifold.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Geometry does not fit in the requested voxel grid.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File payload shorter or longer than its header declares.
class LengthError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Invalid user input to the fitting pipeline (polyline, segmentation).
class InputError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced in a forward or backward pass.
class NumericError : public Error {
 public:
  NumericError(std::string stage, const std::string& what)
      : Error("numeric failure in " + stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Optimization blew up (loss grew past the divergence threshold).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace vessel
