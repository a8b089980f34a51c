#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

/// Base class for every error thrown by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector/matrix length or shape mismatch.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An operation that requires a nonempty input received an empty one.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument is outside its legal range (weights, labels, counts).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Malformed structured input: bad magic/version, broken CSV or config line.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A byte buffer is shorter or longer than its declared content.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// Decoded content is structurally valid but carries impossible values
/// (non-finite parameters, zero sample counts).
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Client/server message sequence violated (mixed rounds, duplicate ids).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// The requested metric has no defined value on this input
/// (e.g. AUC of a single-class sample).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration rejected before any compute. CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure (unreadable input, unwritable output).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedsim
