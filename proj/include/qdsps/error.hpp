#pragma once

#include <stdexcept>
#include <string>

namespace qdsps {

/// A parameter or configuration violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The numerics broke down (trace drift, norm growth, non-finite values).
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidInput(what);
}

}  // namespace qdsps
