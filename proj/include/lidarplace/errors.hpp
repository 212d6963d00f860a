#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lidarplace {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text: JSON syntax, wrong field types, unreadable files.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates model invariants. Carries every violation.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class EmptyGridError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class InstanceTooLargeError : public Error {
 public:
  using Error::Error;
};

// Binary or CSV artifact with a bad header, truncated body or wrong version.
class FormatError : public Error {
 public:
  using Error::Error;
};

class UndefinedFractionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lidarplace
