#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tdfb/tensor.hpp"

namespace tdfb {

// Little-endian container shared by filter and feature dumps:
//   4-byte magic, u8 version (= 1), u32 rows, u32 cols,
//   rows * cols IEEE-754 f32 values, row-major.
// Filter dumps use magic "TDFB" (rows = filters, cols = taps); feature dumps
// use "TDFT" (rows = channels, cols = frames).

inline constexpr char kFilterMagic[4] = {'T', 'D', 'F', 'B'};
inline constexpr char kFeatureMagic[4] = {'T', 'D', 'F', 'T'};
inline constexpr std::uint8_t kDumpVersion = 1;

std::vector<std::uint8_t> encode_dump(const char (&magic)[4], const Matrix& m);
Matrix decode_dump(const char (&magic)[4], const std::vector<std::uint8_t>& bytes);

void write_filter_dump(const std::filesystem::path& path, const Matrix& filters);
Matrix read_filter_dump(const std::filesystem::path& path);
void write_feature_dump(const std::filesystem::path& path, const Matrix& features);
Matrix read_feature_dump(const std::filesystem::path& path);

/// One line per matrix row, comma separated, 6 significant digits.
void write_csv(const std::filesystem::path& path, const Matrix& m);
/// Same, with the matrix transposed (feature CSVs have frames as rows).
void write_csv_transposed(const std::filesystem::path& path, const Matrix& m);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace tdfb
