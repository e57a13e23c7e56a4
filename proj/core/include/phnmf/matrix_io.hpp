#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "phnmf/matrix.hpp"

namespace phnmf {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// CSV: one row per line, comma separated, '.' decimal, no header.
/// Values are written in shortest round-trip form, so write/read is
/// bit-exact.
void write_csv(const std::filesystem::path& path, const Matrix& m);
void write_csv(std::ostream& out, const Matrix& m);
Matrix read_csv(const std::filesystem::path& path);
Matrix parse_csv_matrix(std::istream& in);

/// Binary: magic "PHNM", u64 rows, u64 cols, then rows*cols little-endian
/// IEEE-754 doubles in row-major order.
void write_binary(const std::filesystem::path& path, const Matrix& m);
Matrix read_binary(const std::filesystem::path& path);

/// Dispatches on extension: ".bin" is binary, anything else CSV.
Matrix load_matrix(const std::filesystem::path& path);
void save_matrix(const std::filesystem::path& path, const Matrix& m);

void write_vector_csv(const std::filesystem::path& path,
                      std::span<const double> v);
std::vector<double> read_vector_csv(const std::filesystem::path& path);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace phnmf
