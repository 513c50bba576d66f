#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "stasim/dbb.hpp"
#include "stasim/matrix.hpp"
#include "test_support.hpp"

using namespace stasim;

namespace {

std::string serialize(const Int8Matrix& m) {
  std::ostringstream out;
  write_matrix(out, m);
  return out.str();
}

Int8Matrix parse(const std::string& bytes) {
  std::istringstream in(bytes);
  return read_matrix(in);
}

}  // namespace

TEST(Matrix, RejectsBadShapes) {
  EXPECT_THROW(Int8Matrix(0, 3), ShapeError);
  EXPECT_THROW(Int8Matrix(3, 0), ShapeError);
  EXPECT_THROW(Int8Matrix(kMaxDim + 1, 1), ShapeError);
  EXPECT_THROW(Int8Matrix(2, 2, std::vector<std::int8_t>(3)), ShapeError);
}

TEST(Rng, MatchesStandardMt19937_64) {
  // The standard pins the 10000th output of a default-seeded mt19937_64.
  Rng rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next();
  EXPECT_EQ(v, 9981545732273789042ull);
}

TEST(Rng, NonzeroInt8CoversRangeWithoutZero) {
  Rng rng(1);
  std::vector<int> seen(256, 0);
  for (int i = 0; i < 200000; ++i) ++seen[static_cast<std::size_t>(rng.nonzero_int8() + 128)];
  EXPECT_EQ(seen[128], 0);
  for (int v = -128; v <= 127; ++v) {
    if (v != 0) {
      EXPECT_GT(seen[static_cast<std::size_t>(v + 128)], 0) << v;
    }
  }
}

TEST(Generate, DenseHasNoZeros) {
  const Int8Matrix m = generate(8, 8, SparsityProfile::dense(1));
  EXPECT_EQ(count_nonzeros(m), 64u);
}

TEST(Generate, DbbSingleColumn) {
  const Int8Matrix m = generate(8, 1, SparsityProfile::dbb(8, 3, 7));
  EXPECT_LE(count_nonzeros(m), 3u);
  EXPECT_TRUE(validate(m, 8, 3)[0].empty());
}

TEST(Generate, RandomDensityBand) {
  const Int8Matrix m = generate(64, 64, SparsityProfile::random(0.5, 42));
  const std::size_t nnz = count_nonzeros(m);
  EXPECT_GE(nnz, 1966u);
  EXPECT_LE(nnz, 2130u);
}

TEST(Generate, RandomDensityWithinOnePercent) {
  for (double d : {0.1, 0.375, 0.5, 0.625, 0.9}) {
    const Int8Matrix m = generate(37, 53, SparsityProfile::random(d, 3));
    EXPECT_NEAR(static_cast<double>(count_nonzeros(m)) / static_cast<double>(m.size()), d, 0.01);
  }
}

TEST(Generate, Deterministic) {
  for (const auto& p : {SparsityProfile::dense(9), SparsityProfile::random(0.3, 9), SparsityProfile::dbb(8, 2, 9)}) {
    EXPECT_EQ(generate(33, 17, p), generate(33, 17, p));
  }
  EXPECT_NE(generate(16, 16, SparsityProfile::dense(1)), generate(16, 16, SparsityProfile::dense(2)));
}

TEST(Generate, FrozenStream) {
  // Regression anchor for the documented draw order.
  const Int8Matrix m = generate(4, 4, SparsityProfile::random(0.5, 2024));
  EXPECT_EQ(checksum_hex(widen(m)), "d9aff816ada15456");
}

TEST(Generate, DbbProfilesAlwaysValidate) {
  Rng rng(17);
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t b = 1 + rng.below(16);
    const std::size_t n = 1 + rng.below(b);
    const Int8Matrix m = generate(1 + rng.below(70), 1 + rng.below(9), SparsityProfile::dbb(b, n, rng.next()));
    EXPECT_EQ(violation_count(validate(m, b, n)), 0u);
  }
}

TEST(Generate, RejectsBadProfiles) {
  EXPECT_THROW(generate(4, 4, SparsityProfile::dbb(4, 5, 1)), ConfigError);
  EXPECT_THROW(generate(4, 4, SparsityProfile::random(0.0, 1)), ConfigError);
  EXPECT_THROW(generate(4, 4, SparsityProfile::random(1.5, 1)), ConfigError);
  EXPECT_THROW(generate(0, 4, SparsityProfile::dense(1)), ShapeError);
}

TEST(MatrixFile, RoundTripProperty) {
  Rng rng(5);
  for (int iter = 0; iter < 50; ++iter) {
    const Int8Matrix m = fixtures::random_matrix(rng, 1 + rng.below(40), 1 + rng.below(40), 0.7);
    EXPECT_EQ(parse(serialize(m)), m);
  }
}

TEST(MatrixFile, HeaderLayout) {
  const std::string bytes = serialize(fixtures::from_rows(2, 3, {1, -1, 2, -2, 3, -128}));
  ASSERT_EQ(bytes.size(), 14u + 6u);
  EXPECT_EQ(bytes.substr(0, 4), "STAM");
  EXPECT_EQ(bytes[4], 0x01);
  EXPECT_EQ(bytes[5], 0x01);
  EXPECT_EQ(bytes.substr(6, 8), std::string("\x02\x00\x00\x00\x03\x00\x00\x00", 8));
  EXPECT_EQ(static_cast<unsigned char>(bytes[19]), 0x80);
}

TEST(MatrixFile, AccRoundTripLittleEndian) {
  AccMatrix m(1, 2, {0x01020304, -2});
  std::ostringstream out;
  write_matrix(out, m);
  const std::string bytes = out.str();
  EXPECT_EQ(bytes[5], 0x04);
  EXPECT_EQ(bytes.substr(14, 4), std::string("\x04\x03\x02\x01", 4));
  std::istringstream in(bytes);
  EXPECT_EQ(read_acc_matrix(in), m);
}

TEST(MatrixFile, BadMagic) {
  std::string bytes = serialize(Int8Matrix(2, 2));
  bytes.replace(0, 4, "XXXX");
  EXPECT_THROW(parse(bytes), FormatError);
}

TEST(MatrixFile, TruncatedPayload) {
  std::string bytes = serialize(Int8Matrix(4, 4));
  bytes.pop_back();  // 15 payload bytes for a 4x4 header
  EXPECT_THROW(parse(bytes), FormatError);
  EXPECT_THROW(parse(bytes.substr(0, 9)), FormatError);
}

TEST(MatrixFile, RejectsCorruptHeaders) {
  const std::string good = serialize(Int8Matrix(2, 2));
  std::string bad_version = good;
  bad_version[4] = 0x02;
  EXPECT_THROW(parse(bad_version), FormatError);
  std::string bad_dtype = good;
  bad_dtype[5] = 0x04;  // int32 header on an int8 reader
  EXPECT_THROW(parse(bad_dtype), FormatError);
  std::string zero_rows = good;
  zero_rows[6] = 0;
  EXPECT_THROW(parse(zero_rows), FormatError);
  std::string huge = good;
  huge[9] = 0x7f;  // rows far past the supported range
  EXPECT_THROW(parse(huge), FormatError);
  EXPECT_THROW(parse(good + "x"), FormatError);
}

TEST(MatrixFile, StoreLoadOnDisk) {
  const auto path = std::filesystem::temp_directory_path() / "stasim_matrix_test.stam";
  const Int8Matrix m = generate(9, 13, SparsityProfile::random(0.4, 8));
  store_matrix(m, path);
  EXPECT_EQ(load_matrix(path), m);
  EXPECT_EQ(peek_magic(path), "STAM");
  std::filesystem::remove(path);
  EXPECT_THROW(load_matrix(path), FormatError);
}

TEST(MatrixCsv, RoundTripAndErrors) {
  const Int8Matrix m = generate(5, 3, SparsityProfile::random(0.5, 4));
  std::stringstream ss;
  write_matrix_csv(ss, m);
  EXPECT_EQ(read_matrix_csv(ss), m);

  std::istringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_matrix_csv(ragged), FormatError);
  std::istringstream overflow("1,200\n");
  EXPECT_THROW(read_matrix_csv(overflow), FormatError);
  std::istringstream junk("1,a\n");
  EXPECT_THROW(read_matrix_csv(junk), FormatError);
}

TEST(Checksum, SensitiveToEveryElement) {
  AccMatrix a(2, 2);
  const auto base = checksum(a);
  for (std::size_t i = 0; i < 4; ++i) {
    AccMatrix b = a;
    b.data()[i] = 1;
    EXPECT_NE(checksum(b), base);
  }
}
