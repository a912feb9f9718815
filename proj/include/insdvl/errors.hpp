#pragma once

#include <stdexcept>
#include <string>

namespace insdvl {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Euler extraction attempted at |pitch| = 90 deg.
struct GimbalLock : Error {
  using Error::Error;
};

/// Beam geometry does not determine a 3D velocity.
struct SingularGeometry : Error {
  using Error::Error;
};

/// Velocity window does not determine the rotation.
struct DegenerateWindow : Error {
  using Error::Error;
};

/// Series shorter than the requested window.
struct TooShort : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

/// Dataset files disagree with their manifest.
struct CorruptManifest : Error {
  using Error::Error;
};

/// Tensor/layer dimensions are inconsistent.
struct ShapeMismatch : Error {
  using Error::Error;
};

struct LengthMismatch : Error {
  using Error::Error;
};

/// A method requiring a trained model was invoked without one.
struct MissingModel : Error {
  using Error::Error;
};

/// Training loss became non-finite.
struct Diverged : Error {
  using Error::Error;
};

}  // namespace insdvl
