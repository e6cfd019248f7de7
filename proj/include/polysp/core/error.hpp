#pragma once

#include <stdexcept>
#include <string>

namespace polysp {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the documented domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent mesh data.
class MeshError : public Error {
public:
  using Error::Error;
};

/// Failure of a linear or eigen solver.
class SolverError : public Error {
public:
  using Error::Error;
};

#define POLYSP_REQUIRE(cond, ExcType, msg)                                     \
  do {                                                                         \
    if (!(cond)) throw ExcType(msg);                                           \
  } while (false)

}  // namespace polysp
