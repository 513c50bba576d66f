#include "stasim/matrix.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace stasim {

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'T', 'A', 'M'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_header(std::ostream& out, std::uint8_t dtype, std::size_t rows, std::size_t cols) {
  out.write(kMagic.data(), kMagic.size());
  out.put(static_cast<char>(kMatrixFormatVersion));
  out.put(static_cast<char>(dtype));
  put_u32(out, static_cast<std::uint32_t>(rows));
  put_u32(out, static_cast<std::uint32_t>(cols));
}

struct Header {
  std::uint8_t dtype;
  std::size_t rows;
  std::size_t cols;
};

Header read_header(std::istream& in) {
  unsigned char raw[14];
  in.read(reinterpret_cast<char*>(raw), sizeof raw);
  if (in.gcount() != static_cast<std::streamsize>(sizeof raw)) {
    throw FormatError("truncated matrix header");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), raw)) throw FormatError("bad matrix magic (expected STAM)");
  if (raw[4] != kMatrixFormatVersion) {
    throw FormatError("unsupported matrix format version " + std::to_string(raw[4]));
  }
  Header h{raw[5], get_u32(raw + 6), get_u32(raw + 10)};
  if (h.dtype != kDtypeInt8 && h.dtype != kDtypeInt32) {
    throw FormatError("unknown matrix dtype code " + std::to_string(h.dtype));
  }
  if (h.rows == 0 || h.cols == 0 || h.rows > kMaxDim || h.cols > kMaxDim) {
    throw FormatError("matrix dimensions " + std::to_string(h.rows) + "x" + std::to_string(h.cols) +
                      " out of range");
  }
  return h;
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t bytes) {
  std::vector<unsigned char> buf(bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  if (in.gcount() != static_cast<std::streamsize>(bytes)) {
    throw FormatError("truncated matrix payload: expected " + std::to_string(bytes) + " bytes, got " +
                      std::to_string(in.gcount()));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after matrix payload");
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

}  // namespace

AccMatrix widen(const Int8Matrix& m) {
  AccMatrix out(m.rows(), m.cols());
  std::copy(m.data().begin(), m.data().end(), out.data().begin());
  return out;
}

std::size_t count_nonzeros(const Int8Matrix& m) {
  return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(), [](auto v) { return v != 0; }));
}

std::uint64_t checksum(const AccMatrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::int32_t v : m.data()) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int shift = 0; shift < 32; shift += 8) {
      h ^= (u >> shift) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

std::string checksum_hex(const AccMatrix& m) {
  static constexpr char digits[] = "0123456789abcdef";
  std::uint64_t h = checksum(m);
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return s;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below requires a positive bound");
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

std::int8_t Rng::nonzero_int8() {
  int v = static_cast<int>(below(255)) - 128;  // [-128, 126]
  if (v >= 0) ++v;
  return static_cast<std::int8_t>(v);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string to_string(SparsityKind kind) {
  switch (kind) {
    case SparsityKind::dense: return "dense";
    case SparsityKind::random: return "random";
    case SparsityKind::dbb: return "dbb";
  }
  return "?";
}

SparsityKind parse_sparsity_kind(const std::string& s) {
  if (s == "dense") return SparsityKind::dense;
  if (s == "random") return SparsityKind::random;
  if (s == "dbb") return SparsityKind::dbb;
  throw ConfigError("unknown sparsity kind '" + s + "'");
}

SparsityProfile SparsityProfile::dense(std::uint64_t seed) { return {SparsityKind::dense, 1.0, 8, 8, seed}; }

SparsityProfile SparsityProfile::random(double density, std::uint64_t seed) {
  return {SparsityKind::random, density, 8, 8, seed};
}

SparsityProfile SparsityProfile::dbb(std::size_t block_size, std::size_t nnz_bound, std::uint64_t seed) {
  return {SparsityKind::dbb, static_cast<double>(nnz_bound) / static_cast<double>(block_size), block_size,
          nnz_bound, seed};
}

double SparsityProfile::effective_density() const {
  if (kind == SparsityKind::dbb) return static_cast<double>(nnz_bound) / static_cast<double>(block_size);
  if (kind == SparsityKind::dense) return 1.0;
  return density;
}

void SparsityProfile::validate() const {
  switch (kind) {
    case SparsityKind::dense: return;
    case SparsityKind::random:
      if (!(density > 0.0 && density <= 1.0)) throw ConfigError("density must lie in (0, 1]");
      return;
    case SparsityKind::dbb:
      if (block_size == 0) throw ConfigError("block size must be positive");
      if (nnz_bound == 0) throw ConfigError("nnz bound must be positive");
      if (nnz_bound > block_size) throw ConfigError("nnz bound exceeds block size");
      return;
  }
}

Int8Matrix generate(std::size_t rows, std::size_t cols, const SparsityProfile& profile) {
  profile.validate();
  Int8Matrix m(rows, cols);
  Rng rng(profile.seed);

  switch (profile.kind) {
    case SparsityKind::dense:
      for (auto& v : m.data()) v = rng.nonzero_int8();
      break;

    case SparsityKind::random: {
      const std::size_t total = m.size();
      const auto nnz = static_cast<std::size_t>(std::llround(profile.density * static_cast<double>(total)));
      std::vector<std::size_t> slots(total);
      std::iota(slots.begin(), slots.end(), std::size_t{0});
      for (std::size_t i = 0; i < nnz; ++i) {
        std::swap(slots[i], slots[i + rng.below(total - i)]);
        m.data()[slots[i]] = rng.nonzero_int8();
      }
      break;
    }

    case SparsityKind::dbb: {
      const std::size_t b = profile.block_size;
      std::vector<std::size_t> slots(b);
      for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t base = 0; base < rows; base += b) {
          const std::size_t len = std::min(b, rows - base);
          const std::size_t keep = std::min(profile.nnz_bound, len);
          std::iota(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(len), std::size_t{0});
          for (std::size_t i = 0; i < keep; ++i) {
            std::swap(slots[i], slots[i + rng.below(len - i)]);
            m(base + slots[i], c) = rng.nonzero_int8();
          }
        }
      }
      break;
    }
  }
  return m;
}

void write_matrix(std::ostream& out, const Int8Matrix& m) {
  write_header(out, kDtypeInt8, m.rows(), m.cols());
  out.write(reinterpret_cast<const char*>(m.data().data()), static_cast<std::streamsize>(m.size()));
}

void write_matrix(std::ostream& out, const AccMatrix& m) {
  write_header(out, kDtypeInt32, m.rows(), m.cols());
  for (std::int32_t v : m.data()) put_u32(out, static_cast<std::uint32_t>(v));
}

Int8Matrix read_matrix(std::istream& in) {
  const Header h = read_header(in);
  if (h.dtype != kDtypeInt8) throw FormatError("expected an int8 matrix, found dtype " + std::to_string(h.dtype));
  const auto raw = read_payload(in, h.rows * h.cols);
  std::vector<std::int8_t> data(raw.size());
  std::transform(raw.begin(), raw.end(), data.begin(), [](unsigned char b) { return static_cast<std::int8_t>(b); });
  return Int8Matrix(h.rows, h.cols, std::move(data));
}

AccMatrix read_acc_matrix(std::istream& in) {
  const Header h = read_header(in);
  if (h.dtype != kDtypeInt32) throw FormatError("expected an int32 matrix, found dtype " + std::to_string(h.dtype));
  const auto raw = read_payload(in, h.rows * h.cols * 4);
  std::vector<std::int32_t> data(h.rows * h.cols);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::int32_t>(get_u32(raw.data() + 4 * i));
  return AccMatrix(h.rows, h.cols, std::move(data));
}

void store_matrix(const Int8Matrix& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_matrix(out, m);
}

void store_matrix(const AccMatrix& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_matrix(out, m);
}

Int8Matrix load_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_matrix(in);
}

AccMatrix load_acc_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_acc_matrix(in);
}

void write_matrix_csv(std::ostream& out, const Int8Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << static_cast<int>(m(r, c));
    }
    out << '\n';
  }
}

Int8Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::int8_t> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t n = 0;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(cell, &used);
      } catch (const std::exception&) {
        throw FormatError("bad CSV cell '" + cell + "' on row " + std::to_string(rows));
      }
      if (used != cell.size() || v < -128 || v > 127) {
        throw FormatError("bad CSV cell '" + cell + "' on row " + std::to_string(rows));
      }
      data.push_back(static_cast<std::int8_t>(v));
      ++n;
    }
    if (rows == 0) cols = n;
    if (n != cols) throw FormatError("ragged CSV row " + std::to_string(rows));
    ++rows;
  }
  if (rows == 0 || cols == 0) throw FormatError("empty CSV matrix");
  try {
    return Int8Matrix(rows, cols, std::move(data));
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
}

std::string peek_magic(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string magic(4, '\0');
  in.read(magic.data(), 4);
  if (in.gcount() != 4) return {};
  return magic;
}

}  // namespace stasim
