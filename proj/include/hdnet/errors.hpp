#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hdnet {

// Error categories. The CLI maps each category to one exit code, so every
// throw site in the library picks the narrowest class that applies.

// Malformed or inconsistent input data (parse, validation, imputation, split size).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class ImputationError : public DataError {
 public:
  using DataError::DataError;
};

class SizeError : public DataError {
 public:
  using DataError::DataError;
};

// Serialized model/scaler/config that does not match the expected layout.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// Tensor/vector dimensions that disagree with the network.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Training produced a non-finite error sum.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, double sse)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                           " (sse=" + std::to_string(sse) + ")"),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(what + ": " + path), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace hdnet
