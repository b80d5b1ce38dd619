#pragma once

#include <stdexcept>
#include <string>

namespace edukg {

// Base of every error raised by the library. Callers that only care about
// "something went wrong" catch this; the subclasses carry the category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long long position)
      : Error(what), position_(position) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  // Line number for JSON inputs, byte offset for XML; -1 if unknown.
  long long position() const { return position_; }

 private:
  long long position_ = -1;
};

class ConfigError : public Error {
  using Error::Error;
};

class NotFound : public Error {
  using Error::Error;
};

class DataError : public Error {
  using Error::Error;
};

class ContractViolation : public Error {
  using Error::Error;
};

class ValidationError : public Error {
  using Error::Error;
};

class ConflictError : public Error {
  using Error::Error;
};

class EmptyGraph : public Error {
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool retryable)
      : Error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

class LinkerUnavailable : public Error {
  using Error::Error;
};

}  // namespace edukg
