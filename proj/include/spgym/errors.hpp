#pragma once

#include <stdexcept>
#include <string>

namespace spgym {

// Violated domain precondition: malformed state, unsolvable input, grid too
// large for a table, and so on. Maps to CLI exit code 1.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Bad run configuration or unusable input files. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spgym
