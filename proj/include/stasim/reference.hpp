#pragma once

// Brute-force oracles. Nothing here shares code with the simulator or the
// DBB codec; a disagreement with either is a bug.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stasim/matrix.hpp"

namespace stasim::reference {

struct OracleResult {
  AccMatrix product;
  std::chrono::nanoseconds elapsed;
};

// Definitional triple loop, int32 wrapping accumulate, no tiling.
AccMatrix oracle_gemm(const Int8Matrix& x, const Int8Matrix& w);
OracleResult timed_oracle_gemm(const Int8Matrix& x, const Int8Matrix& w);

// hist[p] = number of aligned column blocks holding p non-zeros, p in [0, b].
std::vector<std::uint64_t> block_nnz_histogram(const Int8Matrix& w, std::size_t block_size);

// Blocks with more than nnz_bound non-zeros, by direct scan.
std::size_t count_violating_blocks(const Int8Matrix& w, std::size_t block_size, std::size_t nnz_bound);

// Smallest total |value| that has to be zeroed to leave at most nnz_bound
// non-zeros, found by enumerating every keep-subset. Block length <= 16.
std::int64_t min_zeroed_magnitude(std::span<const std::int8_t> block, std::size_t nnz_bound);

// Fraction of (row, k, col) operand pairs in x * w where either side is zero.
double zero_pair_fraction(const Int8Matrix& x, const Int8Matrix& w);

}  // namespace stasim::reference
