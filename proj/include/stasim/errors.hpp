#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stasim {

// Malformed or corrupt data: bad magic, truncated payload, DBB bound violation.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions that do not agree with each other or with the array.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An ArrayConfig that breaks one or more validity rules.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A block holds more non-zeros than the density bound allows; the matrix
// has to be pruned before it can be encoded.
class BoundViolation : public FormatError {
 public:
  BoundViolation(std::size_t col, std::size_t block_index, std::size_t found_nnz)
      : FormatError("DBB bound violation at column " + std::to_string(col) + ", block " +
                    std::to_string(block_index) + " (" + std::to_string(found_nnz) +
                    " non-zeros)"),
        col_(col),
        block_index_(block_index),
        found_nnz_(found_nnz) {}

  std::size_t col() const { return col_; }
  std::size_t block_index() const { return block_index_; }
  std::size_t found_nnz() const { return found_nnz_; }

 private:
  std::size_t col_;
  std::size_t block_index_;
  std::size_t found_nnz_;
};

}  // namespace stasim
