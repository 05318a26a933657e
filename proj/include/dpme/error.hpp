#pragma once

#include <stdexcept>
#include <string>

namespace dpme {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter is outside its mathematical domain (alpha <= 0, T < 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Vectors or matrices whose dimensions do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input data is malformed or degenerate (ragged CSV, all-identical points).
class DataError : public Error {
 public:
  using Error::Error;
};

// Interval partition is overlapping or not exhaustive.
class PartitionError : public Error {
 public:
  using Error::Error;
};

// An internal invariant was violated; indicates a bug rather than bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpme
