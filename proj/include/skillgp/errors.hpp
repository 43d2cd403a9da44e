#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skillgp {

/// Base class for every error thrown by this library. Catching this is
/// enough to handle any failure mode; the subclasses exist so callers can
/// distinguish bad input data from numerical trouble when they care.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- geometry ---

/// Cranial direction and scope axis are (anti)parallel, so the local frame
/// is not defined.
class DegenerateFrame : public Error {
 public:
  using Error::Error;
};

// --- kinematics ---

/// A predict step was asked to go backwards in time.
class NegativeDt : public Error {
 public:
  using Error::Error;
};

/// An operation that needs at least one sample got none.
class EmptyTrack : public Error {
 public:
  using Error::Error;
};

/// Timestamps of one device went backwards.
class NonMonotoneTime : public Error {
 public:
  using Error::Error;
  NonMonotoneTime(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  /// 1-based input line, or 0 when the error did not come from a parser.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// --- features ---

/// A labelled dataset contains only one of the two classes.
class SingleClass : public Error {
 public:
  using Error::Error;
};

/// Not enough samples for the requested statistic or fit.
class TooFewSamples : public Error {
 public:
  using Error::Error;
};

/// A normalizer fit was attempted on an empty training set.
class EmptyTrainingSet : public Error {
 public:
  using Error::Error;
};

// --- gp ---

/// Matrix/vector sizes do not line up.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// An operation that needs data got an empty matrix.
class EmptyInput : public Error {
 public:
  using Error::Error;
};

/// The Gram matrix was not positive definite even after jitter.
class CholeskyFailure : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity showed up in inputs or intermediate results.
class NonFinite : public Error {
 public:
  using Error::Error;
};

// --- assess ---

/// Prediction was requested from a model with no training data.
class UntrainedModel : public Error {
 public:
  using Error::Error;
};

// --- synth / config ---

/// A configuration value is outside its legal range.
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

// --- io ---

/// A data row could not be parsed; carries the 1-based line number.
class MalformedRow : public Error {
 public:
  MalformedRow(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// The file declares a format version this build does not understand.
class UnknownVersion : public Error {
 public:
  using Error::Error;
};

/// The input contained no data rows at all.
class EmptyFile : public Error {
 public:
  using Error::Error;
};

}  // namespace skillgp
