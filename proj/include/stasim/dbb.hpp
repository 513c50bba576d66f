#pragma once

// Density-bound block (DBB) compressed weights.
//
// Blocks run down the reduction (row) dimension of each column: block j of
// column c covers rows [j*b, j*b + b). Each block stores a b-bit mask, bit k
// (LSB-first within byte k/8) set when row j*b + k is non-zero, followed by
// exactly n value slots. The first popcount(mask) slots hold the non-zeros in
// ascending row order; the rest are zero. Rows past the end of the matrix in
// the final block are implicit zero padding.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "stasim/matrix.hpp"

namespace stasim {

class DBBMatrix {
 public:
  // All blocks empty.
  DBBMatrix(std::size_t rows, std::size_t cols, std::size_t block_size, std::size_t nnz_bound);

  // Takes ownership of a column-major block stream. Throws FormatError if any
  // block breaks the layout invariants.
  DBBMatrix(std::size_t rows, std::size_t cols, std::size_t block_size, std::size_t nnz_bound,
            std::vector<std::uint8_t> masks, std::vector<std::int8_t> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t block_size() const { return block_size_; }
  std::size_t nnz_bound() const { return nnz_bound_; }
  std::size_t blocks_per_col() const { return blocks_per_col_; }
  std::size_t mask_bytes_per_block() const { return mask_bytes_; }

  std::span<const std::uint8_t> mask(std::size_t col, std::size_t block) const;
  std::span<const std::int8_t> values(std::size_t col, std::size_t block) const;
  bool bit(std::size_t col, std::size_t block, std::size_t k) const;
  std::size_t popcount(std::size_t col, std::size_t block) const;

  std::span<const std::uint8_t> all_masks() const { return masks_; }
  std::span<const std::int8_t> all_values() const { return values_; }

  bool operator==(const DBBMatrix&) const = default;

 private:
  friend DBBMatrix encode(const Int8Matrix&, std::size_t, std::size_t);

  std::size_t block_index(std::size_t col, std::size_t block) const { return col * blocks_per_col_ + block; }
  void check_invariants() const;

  std::size_t rows_;
  std::size_t cols_;
  std::size_t block_size_;
  std::size_t nnz_bound_;
  std::size_t blocks_per_col_;
  std::size_t mask_bytes_;
  std::vector<std::uint8_t> masks_;
  std::vector<std::int8_t> values_;
};

struct FootprintReport {
  std::size_t dense_bytes = 0;
  std::size_t compressed_bytes = 0;
  std::size_t mask_bytes = 0;
  std::size_t value_bytes = 0;
  double reduction_fraction = 0.0;
};

// Throws BoundViolation for the first offending block, scanning columns in
// order and blocks top to bottom. Throws ConfigError for b == 0, n == 0,
// n > b or b > 255.
DBBMatrix encode(const Int8Matrix& w, std::size_t block_size, std::size_t nnz_bound);

Int8Matrix decode(const DBBMatrix& d);

// Entry c lists the indices of blocks in column c holding more than
// nnz_bound non-zeros. All entries are empty iff encode would succeed.
std::vector<std::vector<std::size_t>> validate(const Int8Matrix& w, std::size_t block_size, std::size_t nnz_bound);

std::size_t violation_count(const std::vector<std::vector<std::size_t>>& violations);

// Keeps the nnz_bound largest-magnitude elements of every block (ties go to
// the lower row) and zeroes the rest.
Int8Matrix prune_to_dbb(const Int8Matrix& w, std::size_t block_size, std::size_t nnz_bound);

FootprintReport footprint(const DBBMatrix& d);
FootprintReport footprint(std::size_t rows, std::size_t cols, std::size_t block_size, std::size_t nnz_bound);

// STAD binary format: "STAD", version 0x01, b, n, rows and cols as
// little-endian u32, then the column-major block stream.
inline constexpr std::uint8_t kDbbFormatVersion = 0x01;

void write_dbb(std::ostream& out, const DBBMatrix& d);
DBBMatrix read_dbb(std::istream& in);
void store_dbb(const DBBMatrix& d, const std::filesystem::path& path);
DBBMatrix load_dbb(const std::filesystem::path& path);

}  // namespace stasim
