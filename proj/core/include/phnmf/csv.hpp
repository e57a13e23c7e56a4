#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace phnmf {

/// One parsed CSV record. `line` is the 1-based line on which it starts.
struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// RFC 4180 style reader: comma separated, fields optionally wrapped in
/// double quotes, "" inside quotes is a literal quote, quoted fields may
/// span lines. CRLF and LF endings are both accepted. Blank lines are
/// skipped.
std::vector<CsvRecord> parse_csv(std::istream& in);
std::vector<CsvRecord> read_csv_records(const std::filesystem::path& path);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(const std::string& field);

}  // namespace phnmf
