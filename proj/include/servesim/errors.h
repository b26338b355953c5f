#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace servesim {

// Root of every error the library raises. The category string is what the
// CLI prints in front of the message and maps to an exit code.
class Error : public std::runtime_error {
 public:
  Error(const char* category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  const char* category() const noexcept { return category_; }

 private:
  const char* category_;
};

// A domain object was constructed with a violated invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error("validation", what) {}
};

// Caller broke a precondition (e.g. unprofiled request reaching the batcher).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error("contract", what) {}
};

// Inputs disagree with each other (plans vs. members, duplicates, ...).
class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what)
      : Error("consistency", what) {}
};

// Byte counts that do not fit in 64 bits.
class SizingError : public Error {
 public:
  explicit SizingError(const std::string& what) : Error("sizing", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

// No device subset can hold the model.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, long long shortfall_layers)
      : Error("infeasible", what), shortfall_layers_(shortfall_layers) {}

  long long shortfall_layers() const noexcept { return shortfall_layers_; }

 private:
  long long shortfall_layers_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

// Malformed input file. line() is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("parse", line ? "line " + std::to_string(line) + ": " + what
                            : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace servesim
