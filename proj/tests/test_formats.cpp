#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "oracles.hpp"
#include "tdfb/errors.hpp"
#include "tdfb/formats.hpp"

using namespace tdfb;

namespace {

// Independent reader for the dump layout, written against the byte format
// rather than the library's decoder.
struct Decoded {
  std::string magic;
  unsigned version = 0;
  std::uint32_t rows = 0, cols = 0;
  std::vector<float> values;
};

Decoded decode_by_hand(const std::vector<std::uint8_t>& b) {
  Decoded d;
  d.magic.assign(b.begin(), b.begin() + 4);
  d.version = b[4];
  d.rows = b[5] | (b[6] << 8) | (b[7] << 16) | (std::uint32_t{b[8]} << 24);
  d.cols = b[9] | (b[10] << 8) | (b[11] << 16) | (std::uint32_t{b[12]} << 24);
  for (std::size_t i = 13; i + 4 <= b.size(); i += 4) {
    float f;
    const std::uint8_t le[4] = {b[i], b[i + 1], b[i + 2], b[i + 3]};
    std::memcpy(&f, le, 4);  // host is little-endian
    d.values.push_back(f);
  }
  return d;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         ("tdfb_formats_" + std::to_string(::getpid()) + "_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Dump, LayoutMatchesHandDecoder) {
  const Matrix m = oracle::gaussian_matrix(3, 5, 4);
  const auto bytes = encode_dump(kFilterMagic, m);
  ASSERT_EQ(bytes.size(), 13u + 4u * 15u);
  const Decoded d = decode_by_hand(bytes);
  EXPECT_EQ(d.magic, "TDFB");
  EXPECT_EQ(d.version, 1u);
  EXPECT_EQ(d.rows, 3u);
  EXPECT_EQ(d.cols, 5u);
  ASSERT_EQ(d.values.size(), 15u);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_EQ(d.values[i], static_cast<float>(m[i]));
  EXPECT_EQ(decode_by_hand(encode_dump(kFeatureMagic, m)).magic, "TDFT");
}

TEST(Dump, RoundTripIsFloatExact) {
  const Matrix m = oracle::gaussian_matrix(40, 400, 9);
  const Matrix back = decode_dump(kFilterMagic, encode_dump(kFilterMagic, m));
  ASSERT_TRUE(back.same_shape(m));
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(m[i])));
  EXPECT_EQ(decode_dump(kFilterMagic, encode_dump(kFilterMagic, back)), back);
}

TEST(Dump, RejectsMalformedInput) {
  const auto good = encode_dump(kFeatureMagic, Matrix(2, 2, 1.0));
  EXPECT_THROW(decode_dump(kFeatureMagic, std::vector<std::uint8_t>(good.begin(), good.begin() + 12)),
               ParseError);
  try {
    decode_dump(kFilterMagic, good);
    FAIL() << "wrong magic accepted";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  auto version = good;
  version[4] = 2;
  EXPECT_THROW(decode_dump(kFeatureMagic, version), UnsupportedFormat);
  auto truncated = good;
  truncated.pop_back();
  EXPECT_THROW(decode_dump(kFeatureMagic, truncated), ParseError);
  auto empty = good;
  empty[5] = empty[6] = empty[7] = empty[8] = 0;
  EXPECT_THROW(decode_dump(kFeatureMagic, empty), ParseError);
}

TEST(Dump, FilesRoundTripAndMissingFileIsIoError) {
  const auto p = temp_path("f.bin");
  const Matrix m = oracle::gaussian_matrix(4, 7, 2);
  write_filter_dump(p, m);
  EXPECT_EQ(read_filter_dump(p), decode_dump(kFilterMagic, encode_dump(kFilterMagic, m)));
  EXPECT_THROW(read_feature_dump(p), ParseError);
  write_feature_dump(p, m);
  EXPECT_EQ(read_feature_dump(p).rows(), 4u);
  std::filesystem::remove(p);
  EXPECT_THROW(read_filter_dump(p), IoError);
  EXPECT_THROW(write_filter_dump(temp_path("missing_dir") / "x.bin", m), IoError);
}

TEST(Csv, RowsAndTransposedRows) {
  const Matrix m = Matrix::from_rows({{1.0, 2.5, -3.0}, {0.1234567, 1e-7, 1e6}});
  const auto p = temp_path("m.csv");
  write_csv(p, m);
  EXPECT_EQ(slurp(p), "1,2.5,-3\n0.123457,1e-07,1e+06\n");
  write_csv_transposed(p, m);
  EXPECT_EQ(slurp(p), "1,0.123457\n2.5,1e-07\n-3,1e+06\n");
  std::filesystem::remove(p);
}
