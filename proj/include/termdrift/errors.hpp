#pragma once

#include <stdexcept>
#include <string>

namespace termdrift {

// Error taxonomy mirroring the CLI exit codes:
//   UsageError   -> 1 (bad flags, unknown venue, unresolvable config)
//   DataError    -> 2 (malformed files, invariant violations, degenerate inputs)
//   ServiceError -> 3 (network failures, missing credentials)
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ServiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A remote resource (e.g. a proceedings volume) that does not exist.
// Not retryable, so it is data-shaped rather than service-shaped.
class NotFoundError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace termdrift
