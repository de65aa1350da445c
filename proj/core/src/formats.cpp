#include "tdfb/formats.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "tdfb/errors.hpp"

namespace tdfb {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | in[pos + static_cast<std::size_t>(i)];
  return v;
}

std::string format_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

std::vector<std::uint8_t> encode_dump(const char (&magic)[4], const Matrix& m) {
  std::vector<std::uint8_t> out;
  out.reserve(13 + 4 * m.size());
  out.insert(out.end(), magic, magic + 4);
  out.push_back(kDumpVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

Matrix decode_dump(const char (&magic)[4], const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 13) throw ParseError("dump header truncated", bytes.size());
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw ParseError("bad magic, expected '" + std::string(magic, 4) + "'", 0);
  }
  if (bytes[4] != kDumpVersion) {
    throw UnsupportedFormat("unsupported dump version " + std::to_string(bytes[4]));
  }
  const std::uint32_t rows = get_u32(bytes, 5);
  const std::uint32_t cols = get_u32(bytes, 9);
  const std::size_t expected = 13 + 4ull * rows * cols;
  if (bytes.size() < expected) throw ParseError("dump payload truncated", bytes.size());
  if (rows == 0 || cols == 0) throw ParseError("dump has an empty dimension", 5);
  std::vector<double> data(static_cast<std::size_t>(rows) * cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, 13 + 4 * i));
  }
  return Matrix(rows, cols, std::move(data));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_filter_dump(const std::filesystem::path& path, const Matrix& filters) {
  write_file(path, encode_dump(kFilterMagic, filters));
}
Matrix read_filter_dump(const std::filesystem::path& path) {
  return decode_dump(kFilterMagic, read_file(path));
}
void write_feature_dump(const std::filesystem::path& path, const Matrix& features) {
  write_file(path, encode_dump(kFeatureMagic, features));
}
Matrix read_feature_dump(const std::filesystem::path& path) {
  return decode_dump(kFeatureMagic, read_file(path));
}

void write_csv(const std::filesystem::path& path, const Matrix& m) {
  std::string text;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) text += ',';
      text += format_g6(m(r, c));
    }
    text += '\n';
  }
  write_text(path, text);
}

void write_csv_transposed(const std::filesystem::path& path, const Matrix& m) {
  std::string text;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (r) text += ',';
      text += format_g6(m(r, c));
    }
    text += '\n';
  }
  write_text(path, text);
}

}  // namespace tdfb
