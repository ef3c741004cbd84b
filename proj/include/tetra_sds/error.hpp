#pragma once

#include <stdexcept>
#include <string>

namespace tetra_sds {

// Violated precondition on a value passed into the library (bad address,
// non-positive rate, probability outside [0,1], ...).
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Scenario configuration rejected; what() lists every offending field.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tetra_sds
