#pragma once

#include <stdexcept>
#include <string>

namespace lsds {

// Every failure raised by the library derives from Error so callers can catch
// a single type; the subclasses let the CLI map failures to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lattices or array shapes that do not line up.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (dt <= 0, empty field, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Model file is truncated, of the wrong version, or of an unexpected kind.
class LoadError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class InferenceError : public Error {
 public:
  using Error::Error;
};

// Input tensor or window of the wrong shape.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lsds
