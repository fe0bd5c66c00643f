#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace council {

inline constexpr const char* kVersion = "0.3.0";

/// Execution policy for the data-parallel kernels. `serial` is the reference
/// path; `parallel` runs the same per-item work under OpenMP and must produce
/// identical results.
enum class Exec { serial, parallel };

/// Malformed external input (JSON schema, CSV header, bad field value).
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A statistic or estimator is not defined for the given input.
class UndefinedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-fatal notes collected while processing (skipped rows, overlaps, ...).
using Warnings = std::vector<std::string>;

}  // namespace council
