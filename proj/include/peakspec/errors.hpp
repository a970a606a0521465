#pragma once

#include <stdexcept>
#include <string>

namespace peakspec {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InterpolationError : public Error {
 public:
  using Error::Error;
};

class NotIntegrable : public Error {
 public:
  using Error::Error;
};

class SingularPencil : public Error {
 public:
  using Error::Error;
};

class EmptySpace : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, std::string trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::string& trace() const noexcept { return trace_; }

 private:
  std::string trace_;
};

class EmptySubdomain : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace peakspec
