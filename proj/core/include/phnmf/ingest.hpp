#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phnmf/matrix.hpp"
#include "phnmf/nmf.hpp"

namespace phnmf {

enum class ColumnKind { categorical, satisfaction, text, ordinal, demographic, drop };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view name);

enum class Sentiment { neg, neutral, pos };

std::string_view to_string(Sentiment s);
Sentiment parse_sentiment(std::string_view name);

/// How text topic coefficients are brought to [0, 1].
enum class TopicScaling {
  column_max,  // each topic column divided by its maximum
  row_max,     // each respondent row divided by its maximum
};

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::drop;
  /// categorical: allowed values, one indicator each (empty = observed
  /// values, sorted). ordinal: levels from lowest to highest.
  std::vector<std::string> choices;
  /// satisfaction: answer -> bucket. Empty means the default mapping.
  std::map<std::string, Sentiment> mapping;
  /// text: number of NMF topics and tf-idf document-frequency floor.
  std::size_t topics = 2;
  std::size_t min_df = 2;
};

struct SurveySchema {
  std::vector<ColumnSpec> columns;
  /// Column whose values become row ids; rows are numbered from 1 otherwise.
  std::optional<std::string> id_column;
  TopicScaling topic_scaling = TopicScaling::column_max;
  /// Master seed for the text-topic NMF runs.
  std::uint64_t seed = 0;

  static SurveySchema from_json(std::string_view text);
  static SurveySchema load(const std::filesystem::path& path);
  std::string to_json() const;
  /// Throws ValidationError on duplicate names or inconsistent settings.
  void validate() const;
  const ColumnSpec* find(std::string_view name) const;
};

/// Raw survey cells in schema column order. A missing (empty) cell is
/// nullopt.
struct RawTable {
  std::vector<std::string> names;
  std::vector<std::vector<std::optional<std::string>>> columns;
  /// 1-based file line of each data row.
  std::vector<std::size_t> lines;
  std::size_t rows() const noexcept { return lines.size(); }
  const std::vector<std::optional<std::string>>& column(
      std::string_view name) const;
};

/// Reads a headered survey CSV. Every header column must be declared in
/// the schema and every schema column must appear in the header.
RawTable load_csv(const std::filesystem::path& path,
                  const SurveySchema& schema);
RawTable parse_survey_csv(std::istream& in, const SurveySchema& schema);

/// Satisfied/agree answers -> pos, dissatisfied/disagree -> neg,
/// "Neutral", "Don't Know" and similar -> neutral. Keys are compared
/// case-insensitively after trimming.
std::map<std::string, Sentiment> default_satisfaction_mapping();

/// Missing cells map to the mapping's "" entry, or neutral when absent.
std::vector<Sentiment> consolidate_satisfaction(
    std::span<const std::optional<std::string>> column,
    const std::map<std::string, Sentiment>& mapping);

/// Two columns per input: (is_pos, is_neg).
Matrix indicator_encode(std::span<const Sentiment> column);

/// Lowercase alphanumeric runs; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);

struct TfidfResult {
  Matrix doc_term;
  /// Sorted ascending; column j of doc_term is vocab[j].
  std::vector<std::string> vocab;
};

/// tf = raw count, idf = ln((1 + N) / (1 + df)) + 1, rows L2-normalized
/// (zero rows stay zero). Terms in fewer than min_df documents are dropped.
TfidfResult tfidf(std::span<const std::string> corpus, std::size_t min_df = 2);

/// W of a rank-k NMF of doc_term, rescaled so each column (or row) has
/// maximum 1. Duplicate documents are factored once and share a W row, so
/// the result does not depend on the order of the rows.
/// All-zero columns or rows are left at zero and counted in `zero_count`.
Matrix text_topic_features(const Matrix& doc_term, std::size_t k,
                           const NmfConfig& config,
                           TopicScaling scaling = TopicScaling::column_max,
                           std::size_t* zero_count = nullptr);

struct EncodedPart {
  Matrix X;
  std::vector<std::string> names;
};

struct EncodedSurvey {
  Matrix X;
  std::vector<std::string> feature_names;
  std::vector<std::string> row_ids;
  std::vector<std::string> demographic_names;
  /// demographics[c][r]: column c, row r; missing cells are empty.
  std::vector<std::vector<std::string>> demographics;
  std::vector<std::string> warnings;
};

/// Horizontal concatenation of parts, in order.
EncodedSurvey assemble(std::span<const EncodedPart> parts, std::size_t rows);

/// Encodes every non-demographic, non-drop column in schema order and
/// routes demographic columns to the side table.
EncodedSurvey encode_survey(const RawTable& table, const SurveySchema& schema,
                            const NmfConfig& text_nmf = {});

/// Writes X.csv, feature_names.txt and demographics.csv (header row, row id
/// first) under `dir`.
void export_encoded(const std::filesystem::path& dir,
                    const EncodedSurvey& survey);

}  // namespace phnmf
