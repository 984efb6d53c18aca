#pragma once

#include <stdexcept>
#include <string>

namespace otpto {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (bad CSV rows, duplicate lines, bad config).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A day with no orders was asked for a fulfillment rate.
class EmptyDayError : public Error {
 public:
  using Error::Error;
};

/// An instance is too large for an exhaustive routine.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Feature columns at prediction time do not match the columns a model was trained on.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Training data cannot support the requested model (empty set, single class).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace otpto
