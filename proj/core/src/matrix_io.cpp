#include "phnmf/matrix_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "phnmf/error.hpp"

namespace phnmf {

namespace {

constexpr std::array<char, 4> kMagic = {'P', 'H', 'N', 'M'};

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory " +
                    path.parent_path().string() + ": " + ec.message());
    }
  }
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc
                                 : std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

double parse_double(std::string_view token, std::size_t line) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t'))
    token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' ||
                            token.back() == '\r'))
    token.remove_suffix(1);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() ||
      token.empty()) {
    throw ParseError("not a number: '" + std::string(token) + "'", line);
  }
  return v;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

void write_csv(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path, false);
  write_csv(out, m);
  if (!out) throw IoError("write failed: " + path.string());
}

Matrix parse_csv_matrix(std::istream& in) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      data.push_back(parse_double(rest.substr(0, comma), line_no));
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError("expected " + std::to_string(cols) + " fields, got " +
                           std::to_string(count),
                       line_no);
    }
    ++rows;
  }
  Matrix m(rows, cols, std::move(data));
  if (!m.all_finite()) throw ValidationError("matrix contains NaN or Inf");
  return m;
}

Matrix read_csv(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  try {
    return parse_csv_matrix(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_binary(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path, true);
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, m.rows());
  put_u64(out, m.cols());
  for (double v : m.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw IoError("write failed: " + path.string());
}

Matrix read_binary(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw ParseError(path.string() + ": missing PHNM magic bytes");
  }
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  if (!in) throw ParseError(path.string() + ": truncated header");
  const auto expected = std::filesystem::file_size(path);
  if (expected != 20 + rows * cols * 8) {
    throw ParseError(path.string() + ": payload size does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<double> data(rows * cols);
  for (auto& v : data) v = std::bit_cast<double>(get_u64(in));
  if (!in) throw ParseError(path.string() + ": truncated payload");
  Matrix m(rows, cols, std::move(data));
  if (!m.all_finite()) throw ValidationError("matrix contains NaN or Inf");
  return m;
}

Matrix load_matrix(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("no such file: " + path.string());
  }
  return path.extension() == ".bin" ? read_binary(path) : read_csv(path);
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  if (path.extension() == ".bin") {
    write_binary(path, m);
  } else {
    write_csv(path, m);
  }
}

void write_vector_csv(const std::filesystem::path& path,
                      std::span<const double> v) {
  write_csv(path, Matrix::column(v));
}

std::vector<double> read_vector_csv(const std::filesystem::path& path) {
  const Matrix m = read_csv(path);
  if (m.cols() != 1 && m.rows() != 0) {
    throw ShapeError(path.string() + ": expected a single column");
  }
  return {m.values().begin(), m.values().end()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path, true);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace phnmf
