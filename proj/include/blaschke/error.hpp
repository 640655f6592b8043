#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace blaschke {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the admissible domain of an operation (chart too small,
/// chart touching the unit circle, log of a non-positive number, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two fields that must live on the same grid do not.
class ChartMismatchError : public Error {
 public:
  using Error::Error;
};

/// A quantity that must be nowhere zero vanishes at some grid point.
class DegenerateError : public Error {
 public:
  DegenerateError(const std::string& what, int i, int j, double x, double y)
      : Error(format(what, i, j, x, y)), i_(i), j_(j), x_(x), y_(y) {}

  int i() const noexcept { return i_; }
  int j() const noexcept { return j_; }
  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }

 private:
  static std::string format(const std::string& what, int i, int j, double x,
                            double y) {
    std::ostringstream os;
    os << what << " at grid point (" << i << ", " << j << "), (x, y) = (" << x
       << ", " << y << ")";
    return os.str();
  }

  int i_, j_;
  double x_, y_;
};

/// kappa - lambda has the wrong sign for a definite metric: L would have to be
/// a negative sum of squares.
class SignError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent branch data for the indefinite construction (beta^2 = 1,
/// |beta| on the wrong side of 1 for the sign of L, ...).
class BranchError : public Error {
 public:
  using Error::Error;
};

/// The integrated frame (e1, e2, xi) lost rank.
class FrameDegeneracyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Run file or flag combination that does not fit the schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace blaschke
