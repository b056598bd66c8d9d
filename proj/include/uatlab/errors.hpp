// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace uatlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A numerical precondition failed (singular system, non-finite value, empty model).
class MathError : public Error {
 public:
  using Error::Error;
};

/// A file or document does not follow the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

std::string shape_str(std::size_t rows, std::size_t cols);

}  // namespace uatlab
