#include "stasim/reference.hpp"

#include <bit>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace stasim::reference {

AccMatrix oracle_gemm(const Int8Matrix& x, const Int8Matrix& w) {
  if (x.cols() != w.rows()) throw ShapeError("oracle_gemm: inner dimensions disagree");
  AccMatrix out(x.rows(), w.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      std::uint32_t acc = 0;
      for (std::size_t k = 0; k < x.cols(); ++k) {
        acc += static_cast<std::uint32_t>(static_cast<std::int32_t>(x(i, k)) * static_cast<std::int32_t>(w(k, j)));
      }
      out(i, j) = static_cast<std::int32_t>(acc);
    }
  }
  return out;
}

OracleResult timed_oracle_gemm(const Int8Matrix& x, const Int8Matrix& w) {
  const auto start = std::chrono::steady_clock::now();
  AccMatrix product = oracle_gemm(x, w);
  return {std::move(product), std::chrono::steady_clock::now() - start};
}

std::vector<std::uint64_t> block_nnz_histogram(const Int8Matrix& w, std::size_t block_size) {
  if (block_size == 0) throw std::invalid_argument("block size must be positive");
  std::vector<std::uint64_t> hist(block_size + 1, 0);
  for (std::size_t c = 0; c < w.cols(); ++c) {
    for (std::size_t base = 0; base < w.rows(); base += block_size) {
      std::size_t nnz = 0;
      for (std::size_t r = base; r < base + block_size && r < w.rows(); ++r) nnz += w(r, c) != 0;
      ++hist[nnz];
    }
  }
  return hist;
}

std::size_t count_violating_blocks(const Int8Matrix& w, std::size_t block_size, std::size_t nnz_bound) {
  const auto hist = block_nnz_histogram(w, block_size);
  std::size_t n = 0;
  for (std::size_t p = nnz_bound + 1; p < hist.size(); ++p) n += hist[p];
  return n;
}

std::int64_t min_zeroed_magnitude(std::span<const std::int8_t> block, std::size_t nnz_bound) {
  if (block.size() > 16) throw std::invalid_argument("brute force limited to blocks of 16");
  std::int64_t total = 0;
  for (auto v : block) total += std::abs(int{v});
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  const unsigned subsets = 1u << block.size();
  for (unsigned keep = 0; keep < subsets; ++keep) {
    if (static_cast<std::size_t>(std::popcount(keep)) > nnz_bound) continue;
    std::int64_t kept = 0;
    for (std::size_t i = 0; i < block.size(); ++i) {
      if ((keep >> i) & 1u) kept += std::abs(int{block[i]});
    }
    best = std::min(best, total - kept);
  }
  return best;
}

double zero_pair_fraction(const Int8Matrix& x, const Int8Matrix& w) {
  if (x.cols() != w.rows()) throw ShapeError("zero_pair_fraction: inner dimensions disagree");
  std::uint64_t zero = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < x.cols(); ++k) {
      for (std::size_t j = 0; j < w.cols(); ++j) zero += (x(i, k) == 0 || w(k, j) == 0);
    }
  }
  return static_cast<double>(zero) / static_cast<double>(x.rows() * x.cols() * w.cols());
}

}  // namespace stasim::reference
