#pragma once

#include <stdexcept>
#include <string>

namespace parfid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimensions or block structure of the operands do not match.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A named invariant of a domain type does not hold for the given data.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// An input document does not follow the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// The caller broke an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NotPsdError : public Error {
 public:
  NotPsdError(const std::string& what, double eigenvalue)
      : Error(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

// An eigenvalue sits inside the ambiguous band around the rank tolerance, so
// the support (and with it the local inverse) is not numerically well defined.
class LocalInvertibilityError : public Error {
 public:
  LocalInvertibilityError(const std::string& what, double eigenvalue)
      : Error(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace parfid
