#pragma once

#include <stdexcept>
#include <string>

namespace fsdim {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A digit outside [0, base-1], or a malformed digit file.
class InvalidDigit : public Error {
 public:
  using Error::Error;
};

/// A stream that must be strictly increasing was not.
class OrderViolation : public Error {
 public:
  using Error::Error;
};

class NegativeValue : public Error {
 public:
  using Error::Error;
};

/// The floor of an interval-evaluated value could not be decided at the
/// maximum refinement precision. Carries the last bracketing interval as text.
class AmbiguousFloor : public Error {
 public:
  AmbiguousFloor(const std::string& what, std::string lower, std::string upper)
      : Error(what), lower_(std::move(lower)), upper_(std::move(upper)) {}
  const std::string& lower() const noexcept { return lower_; }
  const std::string& upper() const noexcept { return upper_; }

 private:
  std::string lower_;
  std::string upper_;
};

class EmptyCensus : public Error {
 public:
  using Error::Error;
};

class NotEnoughData : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class ThresholdNotFound : public Error {
 public:
  using Error::Error;
};

/// A construction report does not describe the sequence it is applied to.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace fsdim
