#pragma once

#include <stdexcept>
#include <string>

namespace fracevo {

// Base class for all library errors so callers can catch the whole family.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A truncated series failed to meet its tolerance within the term budget,
// or the argument lies outside the admissible range of the evaluator.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Requested a permutable-only solver for operators with a non-zero commutator.
class NotPermutable : public Error {
 public:
  using Error::Error;
};

// A certified a-priori bound was violated by the computed solution.  The
// bounds are theorems, so this signals an implementation or input bug.
class BoundViolation : public Error {
 public:
  using Error::Error;
};

class GridTooCoarse : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fracevo
