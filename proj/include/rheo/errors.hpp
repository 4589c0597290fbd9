#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rheo {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, violated preconditions, unusable data.
/// The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A computation that could not be carried out on valid-looking input.
/// The CLI maps these to exit code 2.
class ComputeError : public Error {
 public:
  using Error::Error;
};

#define RHEO_DECLARE_ERROR(Name, Base)              \
  class Name : public Base {                        \
   public:                                          \
    explicit Name(const std::string& what)          \
        : Base(std::string(#Name ": ") + what) {}   \
  }

RHEO_DECLARE_ERROR(DenominatorTooSmall, ComputeError);
RHEO_DECLARE_ERROR(NotPositiveDefinite, ComputeError);
RHEO_DECLARE_ERROR(NonFiniteLoss, ComputeError);

RHEO_DECLARE_ERROR(DimensionMismatch, ValidationError);
RHEO_DECLARE_ERROR(EmptyBatch, ValidationError);
RHEO_DECLARE_ERROR(EmptyDataset, ValidationError);
RHEO_DECLARE_ERROR(TooFewSamples, ValidationError);
RHEO_DECLARE_ERROR(EmptyGrid, ValidationError);
RHEO_DECLARE_ERROR(TooFewPoints, ValidationError);
RHEO_DECLARE_ERROR(MissingMcr, ValidationError);
RHEO_DECLARE_ERROR(DegenerateRange, ValidationError);
RHEO_DECLARE_ERROR(EmptySmiles, ValidationError);
RHEO_DECLARE_ERROR(NonPositiveComponent, ValidationError);
RHEO_DECLARE_ERROR(LengthMismatch, ValidationError);
RHEO_DECLARE_ERROR(EmptyInput, ValidationError);
RHEO_DECLARE_ERROR(ZeroVariance, ValidationError);
RHEO_DECLARE_ERROR(TooFewMonomers, ValidationError);
RHEO_DECLARE_ERROR(EmptySamples, ValidationError);
RHEO_DECLARE_ERROR(InvalidCounts, ValidationError);

#undef RHEO_DECLARE_ERROR

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& reason)
      : ValidationError("ParseError at line " + std::to_string(line) +
                        ", column " + std::to_string(column) + ": " + reason),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class InvariantViolation : public ValidationError {
 public:
  InvariantViolation(const std::string& record_id, const std::string& detail)
      : ValidationError("InvariantViolation in record '" + record_id +
                        "': " + detail),
        record_id_(record_id) {}

  const std::string& record_id() const { return record_id_; }

 private:
  std::string record_id_;
};

}  // namespace rheo
