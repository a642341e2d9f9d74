#pragma once

#include <stdexcept>
#include <string>

namespace metagen {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad or unreadable input data (corpus files, benchmark files, pool files).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (weights, depths, field names, templates).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// External provider failure (embedding, NER, generation services).
class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& what, bool retryable = false)
      : Error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

}  // namespace metagen
