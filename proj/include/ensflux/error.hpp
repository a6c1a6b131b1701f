#pragma once

#include <stdexcept>
#include <string>

namespace ensflux {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solver state exceeded the magnitude cap or became non-finite.
class BlowUp : public Error {
 public:
  BlowUp(double time, const std::string& what) : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class ScaleTooLarge : public Error {
 public:
  using Error::Error;
};

class BoundViolation : public Error {
 public:
  using Error::Error;
};

class ResolutionTooCoarse : public Error {
 public:
  using Error::Error;
};

class TooFewSnapshots : public Error {
 public:
  using Error::Error;
};

class DegeneratePalinstrophy : public Error {
 public:
  using Error::Error;
};

class ScaleOutOfRange : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ensflux
