#include "phnmf/csv.hpp"

#include <fstream>
#include <istream>
#include <iterator>

#include "phnmf/error.hpp"

namespace phnmf {

std::vector<CsvRecord> parse_csv(std::istream& in) {
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  std::vector<CsvRecord> out;
  CsvRecord rec;
  std::string field;
  std::size_t line = 1;
  bool in_quotes = false;
  bool quoted = false;     // current field was opened with a quote
  bool any_char = false;   // anything seen on the current record
  rec.line = 1;

  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    quoted = false;
  };
  auto end_record = [&] {
    if (any_char) {
      end_field();
      out.push_back(std::move(rec));
    }
    rec = CsvRecord{};
    field.clear();
    quoted = false;
    any_char = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || quoted) {
          throw ParseError("unexpected quote inside unquoted field", line);
        }
        if (!any_char) rec.line = line;
        in_quotes = true;
        quoted = true;
        any_char = true;
        break;
      case ',':
        if (!any_char) rec.line = line;
        any_char = true;
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        rec.line = line;
        break;
      default:
        if (quoted) {
          throw ParseError("characters after closing quote", line);
        }
        if (!any_char) rec.line = line;
        any_char = true;
        field += c;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", rec.line);
  end_record();
  return out;
}

std::vector<CsvRecord> read_csv_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace phnmf
