#pragma once

#include <stdexcept>
#include <string>

namespace facehal {

// Base error for every failure raised by the library. Callers that only care
// about "something went wrong" catch this; the subclasses exist so tests and
// the CLI can tell input problems apart from numerical ones.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ExternalDenoiserError : public Error {
 public:
  using Error::Error;
};

class ModelFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace facehal
