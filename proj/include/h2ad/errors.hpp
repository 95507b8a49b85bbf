#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace h2ad {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid array configuration or malformed config input. The CLI maps
/// this family to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NonCoprimeError : public ConfigError {
 public:
  NonCoprimeError(int q, int k)
      : ConfigError("groups " + std::to_string(q) + " and " + std::to_string(k) +
                    " have non-coprime subarray sizes; ambiguity is unresolvable"),
        first(q), second(k) {}
  int first;
  int second;
};

class TooSmallError : public ConfigError {
 public:
  explicit TooSmallError(int q)
      : ConfigError("group " + std::to_string(q) + " needs M >= 2 and K >= 2"), group(q) {}
  int group;
};

class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

class NoRootFound : public Error {
 public:
  using Error::Error;
};

/// A per-group stage failed inside the end-to-end estimator.
class GroupFailure : public Error {
 public:
  GroupFailure(int q, const std::string& why)
      : Error("group " + std::to_string(q) + ": " + why), group(q) {}
  int group;
};

class AngleOutOfGuard : public Error {
 public:
  using Error::Error;
};

class NonPositiveCrlb : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  explicit NonFiniteLoss(int epoch_index)
      : Error("non-finite loss at epoch " + std::to_string(epoch_index)), epoch(epoch_index) {}
  int epoch;
};

class ModelFormatError : public Error {
 public:
  using Error::Error;
};

class BadMagic : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

class DimMismatch : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

class TruncatedFile : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

class EmptyTrialSet : public Error {
 public:
  EmptyTrialSet() : Error("RMSE over an empty trial set") {}
};

class ModelLoadError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace h2ad
