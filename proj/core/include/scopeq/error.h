#pragma once

#include <stdexcept>
#include <string>

namespace scopeq {

// Base class for every error raised by the library. The CLI maps these to
// exit code 2 (data error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero-norm vectors, NaN inputs and similar.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Contrastive loss with fewer than two pairs.
class UndefinedLossError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : Error("diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  SamplingError(const std::string& what, std::size_t positives, std::size_t negatives)
      : Error(what + " (eligible positives=" + std::to_string(positives) +
              ", eligible negatives=" + std::to_string(negatives) + ")"),
        positives_(positives),
        negatives_(negatives) {}
  std::size_t available_positives() const { return positives_; }
  std::size_t available_negatives() const { return negatives_; }

 private:
  std::size_t positives_;
  std::size_t negatives_;
};

class DegenerateTrainingError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input record; `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace scopeq
