#pragma once

#include <stdexcept>
#include <string>

namespace qgl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

// Energy lies on (or numerically on) the spectrum.
class ResonanceError : public Error {
 public:
  using Error::Error;
};

// A check could not be decided at the available accuracy.
class InconclusiveError : public Error {
 public:
  using Error::Error;
};

class FeasibilityError : public Error {
 public:
  FeasibilityError(const std::string& constraint, const std::string& what)
      : Error(what), constraint_(constraint) {}
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace qgl
