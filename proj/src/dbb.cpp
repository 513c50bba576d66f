#include "stasim/dbb.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace stasim {

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'T', 'A', 'D'};

void check_params(std::size_t b, std::size_t n) {
  if (b == 0 || b > 255) throw ConfigError("DBB block size must lie in [1, 255]");
  if (n == 0) throw ConfigError("DBB nnz bound must be positive");
  if (n > b) throw ConfigError("DBB nnz bound exceeds block size");
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::size_t block_nnz(const Int8Matrix& w, std::size_t col, std::size_t base, std::size_t b) {
  std::size_t nnz = 0;
  for (std::size_t r = base; r < std::min(base + b, w.rows()); ++r) nnz += w(r, col) != 0;
  return nnz;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

DBBMatrix::DBBMatrix(std::size_t rows, std::size_t cols, std::size_t block_size, std::size_t nnz_bound)
    : rows_(rows), cols_(cols), block_size_(block_size), nnz_bound_(nnz_bound) {
  if (rows == 0 || cols == 0 || rows > kMaxDim || cols > kMaxDim) throw ShapeError("DBB matrix dimensions out of range");
  check_params(block_size, nnz_bound);
  blocks_per_col_ = ceil_div(rows, block_size);
  mask_bytes_ = ceil_div(block_size, 8);
  masks_.assign(cols * blocks_per_col_ * mask_bytes_, 0);
  values_.assign(cols * blocks_per_col_ * nnz_bound, 0);
}

DBBMatrix::DBBMatrix(std::size_t rows, std::size_t cols, std::size_t block_size, std::size_t nnz_bound,
                     std::vector<std::uint8_t> masks, std::vector<std::int8_t> values)
    : DBBMatrix(rows, cols, block_size, nnz_bound) {
  if (masks.size() != masks_.size() || values.size() != values_.size()) {
    throw FormatError("DBB block stream has the wrong length");
  }
  masks_ = std::move(masks);
  values_ = std::move(values);
  check_invariants();
}

std::span<const std::uint8_t> DBBMatrix::mask(std::size_t col, std::size_t block) const {
  return std::span<const std::uint8_t>(masks_).subspan(block_index(col, block) * mask_bytes_, mask_bytes_);
}

std::span<const std::int8_t> DBBMatrix::values(std::size_t col, std::size_t block) const {
  return std::span<const std::int8_t>(values_).subspan(block_index(col, block) * nnz_bound_, nnz_bound_);
}

bool DBBMatrix::bit(std::size_t col, std::size_t block, std::size_t k) const {
  return (masks_[block_index(col, block) * mask_bytes_ + k / 8] >> (k % 8)) & 1u;
}

std::size_t DBBMatrix::popcount(std::size_t col, std::size_t block) const {
  std::size_t count = 0;
  for (std::uint8_t byte : mask(col, block)) count += static_cast<std::size_t>(std::popcount(byte));
  return count;
}

void DBBMatrix::check_invariants() const {
  for (std::size_t c = 0; c < cols_; ++c) {
    for (std::size_t blk = 0; blk < blocks_per_col_; ++blk) {
      const std::size_t live = std::min(block_size_, rows_ - blk * block_size_);
      const auto m = mask(c, blk);
      for (std::size_t k = live; k < mask_bytes_ * 8; ++k) {
        if ((m[k / 8] >> (k % 8)) & 1u) {
          throw FormatError("DBB mask bit " + std::to_string(k) + " set outside the matrix (column " +
                            std::to_string(c) + ", block " + std::to_string(blk) + ")");
        }
      }
      const std::size_t pop = popcount(c, blk);
      if (pop > nnz_bound_) throw BoundViolation(c, blk, pop);
      const auto v = values(c, blk);
      for (std::size_t s = 0; s < nnz_bound_; ++s) {
        if ((s < pop) != (v[s] != 0)) {
          throw FormatError("DBB value slots disagree with mask popcount (column " + std::to_string(c) +
                            ", block " + std::to_string(blk) + ")");
        }
      }
    }
  }
}

DBBMatrix encode(const Int8Matrix& w, std::size_t block_size, std::size_t nnz_bound) {
  check_params(block_size, nnz_bound);
  DBBMatrix d(w.rows(), w.cols(), block_size, nnz_bound);
  for (std::size_t c = 0; c < w.cols(); ++c) {
    for (std::size_t blk = 0; blk < d.blocks_per_col(); ++blk) {
      const std::size_t base = blk * block_size;
      const std::size_t nnz = block_nnz(w, c, base, block_size);
      if (nnz > nnz_bound) throw BoundViolation(c, blk, nnz);
      const std::size_t idx = d.block_index(c, blk);
      std::uint8_t* mask = d.masks_.data() + idx * d.mask_bytes_;
      std::int8_t* slot = d.values_.data() + idx * nnz_bound;
      for (std::size_t k = 0; k < block_size && base + k < w.rows(); ++k) {
        const std::int8_t v = w(base + k, c);
        if (v == 0) continue;
        mask[k / 8] = static_cast<std::uint8_t>(mask[k / 8] | (1u << (k % 8)));
        *slot++ = v;
      }
    }
  }
  return d;
}

Int8Matrix decode(const DBBMatrix& d) {
  Int8Matrix w(d.rows(), d.cols());
  for (std::size_t c = 0; c < d.cols(); ++c) {
    for (std::size_t blk = 0; blk < d.blocks_per_col(); ++blk) {
      const auto values = d.values(c, blk);
      std::size_t slot = 0;
      for (std::size_t k = 0; k < d.block_size(); ++k) {
        if (d.bit(c, blk, k)) w(blk * d.block_size() + k, c) = values[slot++];
      }
    }
  }
  return w;
}

std::vector<std::vector<std::size_t>> validate(const Int8Matrix& w, std::size_t block_size, std::size_t nnz_bound) {
  check_params(block_size, nnz_bound);
  std::vector<std::vector<std::size_t>> out(w.cols());
  const std::size_t blocks = ceil_div(w.rows(), block_size);
  for (std::size_t c = 0; c < w.cols(); ++c) {
    for (std::size_t blk = 0; blk < blocks; ++blk) {
      if (block_nnz(w, c, blk * block_size, block_size) > nnz_bound) out[c].push_back(blk);
    }
  }
  return out;
}

std::size_t violation_count(const std::vector<std::vector<std::size_t>>& violations) {
  std::size_t n = 0;
  for (const auto& col : violations) n += col.size();
  return n;
}

Int8Matrix prune_to_dbb(const Int8Matrix& w, std::size_t block_size, std::size_t nnz_bound) {
  check_params(block_size, nnz_bound);
  Int8Matrix out = w;
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < w.cols(); ++c) {
    for (std::size_t base = 0; base < w.rows(); base += block_size) {
      const std::size_t end = std::min(base + block_size, w.rows());
      order.clear();
      for (std::size_t r = base; r < end; ++r) {
        if (w(r, c) != 0) order.push_back(r);
      }
      if (order.size() <= nnz_bound) continue;
      // Stable sort keeps ascending row order among equal magnitudes.
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return std::abs(int{w(a, c)}) > std::abs(int{w(b, c)}); });
      for (std::size_t i = nnz_bound; i < order.size(); ++i) out(order[i], c) = 0;
    }
  }
  return out;
}

FootprintReport footprint(std::size_t rows, std::size_t cols, std::size_t block_size, std::size_t nnz_bound) {
  check_params(block_size, nnz_bound);
  const std::size_t blocks = cols * ceil_div(rows, block_size);
  FootprintReport r;
  r.dense_bytes = rows * cols;
  r.mask_bytes = blocks * ceil_div(block_size, 8);
  r.value_bytes = blocks * nnz_bound;
  r.compressed_bytes = r.mask_bytes + r.value_bytes;
  r.reduction_fraction = 1.0 - static_cast<double>(r.compressed_bytes) / static_cast<double>(r.dense_bytes);
  return r;
}

FootprintReport footprint(const DBBMatrix& d) {
  return footprint(d.rows(), d.cols(), d.block_size(), d.nnz_bound());
}

void write_dbb(std::ostream& out, const DBBMatrix& d) {
  out.write(kMagic.data(), kMagic.size());
  out.put(static_cast<char>(kDbbFormatVersion));
  out.put(static_cast<char>(d.block_size()));
  out.put(static_cast<char>(d.nnz_bound()));
  put_u32(out, static_cast<std::uint32_t>(d.rows()));
  put_u32(out, static_cast<std::uint32_t>(d.cols()));
  for (std::size_t c = 0; c < d.cols(); ++c) {
    for (std::size_t blk = 0; blk < d.blocks_per_col(); ++blk) {
      const auto m = d.mask(c, blk);
      const auto v = d.values(c, blk);
      out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size()));
      out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
    }
  }
}

DBBMatrix read_dbb(std::istream& in) {
  unsigned char raw[15];
  in.read(reinterpret_cast<char*>(raw), sizeof raw);
  if (in.gcount() != static_cast<std::streamsize>(sizeof raw)) throw FormatError("truncated DBB header");
  if (!std::equal(kMagic.begin(), kMagic.end(), raw)) throw FormatError("bad DBB magic (expected STAD)");
  if (raw[4] != kDbbFormatVersion) throw FormatError("unsupported DBB format version " + std::to_string(raw[4]));
  const std::size_t b = raw[5];
  const std::size_t n = raw[6];
  const std::size_t rows = get_u32(raw + 7);
  const std::size_t cols = get_u32(raw + 11);
  if (b == 0 || n == 0 || n > b) throw FormatError("invalid DBB parameters b=" + std::to_string(b) + " n=" + std::to_string(n));
  if (rows == 0 || cols == 0 || rows > kMaxDim || cols > kMaxDim) throw FormatError("DBB dimensions out of range");

  const std::size_t blocks = cols * ceil_div(rows, b);
  const std::size_t mask_bytes = ceil_div(b, 8);
  std::vector<std::uint8_t> masks(blocks * mask_bytes);
  std::vector<std::int8_t> values(blocks * n);
  std::vector<char> buf(mask_bytes + n);
  for (std::size_t i = 0; i < blocks; ++i) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw FormatError("truncated DBB block stream");
    std::copy_n(buf.begin(), mask_bytes, reinterpret_cast<char*>(masks.data() + i * mask_bytes));
    std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(mask_bytes), n, reinterpret_cast<char*>(values.data() + i * n));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after DBB block stream");
  return DBBMatrix(rows, cols, b, n, std::move(masks), std::move(values));
}

void store_dbb(const DBBMatrix& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_dbb(out, d);
}

DBBMatrix load_dbb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_dbb(in);
}

}  // namespace stasim
