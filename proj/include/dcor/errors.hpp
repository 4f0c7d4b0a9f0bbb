#pragma once

#include <stdexcept>
#include <string>

namespace dcor {

// Shape or shape-compatibility violation. The message names the offending shapes.
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file. The message carries the path and line number.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration value: bad probability, budget that does not fit, unknown key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Violated call contract: non-scalar loss node, label length mismatch,
// single-class AUC request, degenerate neighborhood.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite loss. Message names the epoch.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dcor
