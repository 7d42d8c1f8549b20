#pragma once

#include <stdexcept>
#include <string>

namespace sad {

// Malformed document: missing or mistyped field. `path` names the field.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed data that breaks a domain invariant.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input uses a feature outside the supported subset (e.g. curved lanelets).
class UnsupportedFeature : public std::runtime_error {
 public:
  explicit UnsupportedFeature(const std::string& what)
      : std::runtime_error("unsupported feature: " + what) {}
};

// API used out of order (stepping a finished episode, wrong step mode...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace sad
