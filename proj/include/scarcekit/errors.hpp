#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sk {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violated an operation's input domain (bad pixel, bad ratio, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A file did not match its declared on-disk format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Run configuration or command-line usage problem. Maps to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: diverged training, undefined kappa, degenerate
/// denominators. Maps to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(std::size_t epoch, const std::string& context = {})
      : NumericalError("training diverged at epoch " + std::to_string(epoch) +
                       (context.empty() ? std::string{} : " (" + context + ")")),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace sk
