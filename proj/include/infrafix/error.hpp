#pragma once

#include <stdexcept>
#include <string>

namespace infrafix {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Positioned frontend failure. `kind` is a stable failure class such as
// "syntax", "unsupported" or "unsupported-array-title".
class ParseError : public Error {
 public:
  ParseError(std::string kind, int line, int col, const std::string& msg)
      : Error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        kind_(std::move(kind)),
        line_(line),
        col_(col) {}

  const std::string& kind() const { return kind_; }
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  std::string kind_;
  int line_;
  int col_;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class InferenceError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class EngineError : public Error {
 public:
  using Error::Error;
};

class PatchError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace infrafix
