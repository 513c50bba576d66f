#pragma once

// Dense integer matrices, seeded generation with controlled sparsity, and the
// STAM binary / CSV file formats.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stasim/errors.hpp"

namespace stasim {

// Largest supported extent along either dimension.
inline constexpr std::size_t kMaxDim = std::size_t{1} << 16;

// Row-major dense matrix. Dimensions are fixed at construction.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix(std::size_t rows, std::size_t cols) : Matrix(rows, cols, std::vector<T>(checked_size(rows, cols))) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != checked_size(rows, cols)) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  static std::size_t checked_size(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw ShapeError("matrix dimensions must be positive");
    if (rows > kMaxDim || cols > kMaxDim) {
      throw ShapeError("matrix dimension exceeds " + std::to_string(kMaxDim));
    }
    return rows * cols;
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<T> data_;
};

using Int8Matrix = Matrix<std::int8_t>;
using AccMatrix = Matrix<std::int32_t>;

// Widens every element to int32.
AccMatrix widen(const Int8Matrix& m);

std::size_t count_nonzeros(const Int8Matrix& m);

// FNV-1a 64 over the little-endian int32 payload, row-major.
std::uint64_t checksum(const AccMatrix& m);
std::string checksum_hex(const AccMatrix& m);

// Portable seeded generator: std::mt19937_64 (whose output sequence is fixed
// by the C++ standard) with bounded draws by rejection sampling, so the same
// seed yields the same stream with every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  // Uniform over [-128, 127] \ {0}.
  std::int8_t nonzero_int8();

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

enum class SparsityKind { dense, random, dbb };

std::string to_string(SparsityKind kind);
SparsityKind parse_sparsity_kind(const std::string& s);

struct SparsityProfile {
  SparsityKind kind = SparsityKind::dense;
  double density = 1.0;          // random only
  std::size_t block_size = 8;    // dbb only
  std::size_t nnz_bound = 8;     // dbb only
  std::uint64_t seed = 0;

  static SparsityProfile dense(std::uint64_t seed);
  static SparsityProfile random(double density, std::uint64_t seed);
  static SparsityProfile dbb(std::size_t block_size, std::size_t nnz_bound, std::uint64_t seed);

  // nnz_bound / block_size for dbb profiles, density otherwise.
  double effective_density() const;

  // Throws ConfigError when the profile is unusable.
  void validate() const;
};

// Deterministic matrix synthesis.
//   dense:  every element drawn from [-128,127]\{0}.
//   random: exactly round(density * rows * cols) non-zero positions, chosen by
//           a partial Fisher-Yates shuffle over flat indices, then valued in
//           selection order.
//   dbb:    per column, per aligned block of block_size rows (the last block
//           may be short), exactly min(nnz_bound, block length) positions are
//           chosen by partial Fisher-Yates and valued in selection order.
Int8Matrix generate(std::size_t rows, std::size_t cols, const SparsityProfile& profile);

// STAM binary format: "STAM", version 0x01, dtype (0x01 int8, 0x04 int32),
// rows and cols as little-endian u32, row-major little-endian payload.
inline constexpr std::uint8_t kMatrixFormatVersion = 0x01;
inline constexpr std::uint8_t kDtypeInt8 = 0x01;
inline constexpr std::uint8_t kDtypeInt32 = 0x04;

void write_matrix(std::ostream& out, const Int8Matrix& m);
void write_matrix(std::ostream& out, const AccMatrix& m);
Int8Matrix read_matrix(std::istream& in);
AccMatrix read_acc_matrix(std::istream& in);

void store_matrix(const Int8Matrix& m, const std::filesystem::path& path);
void store_matrix(const AccMatrix& m, const std::filesystem::path& path);
Int8Matrix load_matrix(const std::filesystem::path& path);
AccMatrix load_acc_matrix(const std::filesystem::path& path);

// Plain CSV: one matrix row per line, comma separated decimal values.
void write_matrix_csv(std::ostream& out, const Int8Matrix& m);
Int8Matrix read_matrix_csv(std::istream& in);

// First four bytes of a file, or an empty string if it is shorter.
std::string peek_magic(const std::filesystem::path& path);

}  // namespace stasim
