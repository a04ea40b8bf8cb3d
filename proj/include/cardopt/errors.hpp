#pragma once

#include <stdexcept>
#include <string>

namespace cardopt {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A user callback returned non-finite values or a wrongly shaped result.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// An auxiliary variable could not be classified into the index-set partition.
class ClassificationError : public Error {
 public:
  using Error::Error;
};

/// A point violates the precondition of an operation that requires feasibility.
class InfeasibleInput : public Error {
 public:
  using Error::Error;
};

/// An internal subproblem solve (least squares, LP) did not converge.
class SubproblemFailure : public Error {
 public:
  using Error::Error;
};

/// A combinatorial enumeration exceeded its configured cap.
class EnumerationLimit : public Error {
 public:
  using Error::Error;
};

/// The number of cone branches exceeds the configured cap.
class BranchExplosion : public Error {
 public:
  using Error::Error;
};

/// A problem document could not be parsed; the message names the offending field.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& field, const std::string& msg)
      : Error("parse error at '" + field + "': " + msg), field_(field) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Requested built-in problem name is not known.
class UnknownProblem : public Error {
 public:
  using Error::Error;
};

/// The regularization path reached t_min without meeting the stopping test.
class PathStalled : public Error {
 public:
  using Error::Error;
};

}  // namespace cardopt
