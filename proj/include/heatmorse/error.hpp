#pragma once

#include <stdexcept>
#include <string>

namespace heatmorse {

// Raised for violations of an operation's domain (bad eigenvalue, constant
// field, backward time, ...). The CLI maps these to exit status 1.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed field/record files.
class FormatError : public DomainError {
 public:
  explicit FormatError(const std::string& what) : DomainError(what) {}
};

}  // namespace heatmorse
