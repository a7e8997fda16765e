#pragma once

#include <stdexcept>
#include <string>

namespace lgw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments to a library call (ranges, lengths, counts).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Unknown factor/value, or data that does not conform to its schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Malformed input files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, divergence, broken numerical postconditions.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace lgw
