#include "phnmf/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phnmf/csv.hpp"
#include "phnmf/error.hpp"
#include "phnmf/linalg.hpp"
#include "phnmf/matrix_io.hpp"
#include "phnmf/rng.hpp"

namespace phnmf {

namespace {

using json = nlohmann::ordered_json;

std::string normalize_key(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  // Typographic apostrophes are common in exported survey answers.
  std::string fixed;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.compare(i, 3, "\xE2\x80\x99") == 0) {
      fixed += '\'';
      i += 2;
    } else {
      fixed += out[i];
    }
  }
  return fixed;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += '"' + v[i] + '"';
  }
  return out;
}

std::vector<std::string> observed_values(
    std::span<const std::optional<std::string>> column) {
  std::set<std::string> seen;
  for (const auto& v : column) {
    if (v) seen.insert(*v);
  }
  return {seen.begin(), seen.end()};
}

EncodedPart encode_categorical(const ColumnSpec& spec,
                               std::span<const std::optional<std::string>> col) {
  const std::vector<std::string> choices =
      spec.choices.empty() ? observed_values(col) : spec.choices;
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < choices.size(); ++j) index[choices[j]] = j;
  std::vector<std::string> unknown;
  EncodedPart part{Matrix(col.size(), choices.size()), {}};
  for (std::size_t r = 0; r < col.size(); ++r) {
    if (!col[r]) continue;
    const auto it = index.find(*col[r]);
    if (it == index.end()) {
      if (std::find(unknown.begin(), unknown.end(), *col[r]) == unknown.end())
        unknown.push_back(*col[r]);
      continue;
    }
    part.X(r, it->second) = 1.0;
  }
  if (!unknown.empty()) {
    throw ValidationError("column '" + spec.name +
                          "' has values not listed in choices: " +
                          join(unknown));
  }
  for (const auto& c : choices) part.names.push_back(spec.name + "=" + c);
  return part;
}

EncodedPart encode_ordinal(const ColumnSpec& spec,
                           std::span<const std::optional<std::string>> col,
                           std::vector<std::string>& warnings) {
  if (spec.choices.size() < 2) {
    throw ValidationError("ordinal column '" + spec.name +
                          "' needs at least two levels");
  }
  EncodedPart part{Matrix(col.size(), 1), {spec.name}};
  const double top = static_cast<double>(spec.choices.size() - 1);
  std::size_t missing = 0;
  std::vector<std::string> unknown;
  for (std::size_t r = 0; r < col.size(); ++r) {
    if (!col[r]) {
      ++missing;
      continue;
    }
    const auto it =
        std::find(spec.choices.begin(), spec.choices.end(), *col[r]);
    if (it == spec.choices.end()) {
      unknown.push_back(*col[r]);
      continue;
    }
    part.X(r, 0) = static_cast<double>(it - spec.choices.begin()) / top;
  }
  if (!unknown.empty()) {
    throw ValidationError("ordinal column '" + spec.name +
                          "' has unknown levels: " + join(unknown));
  }
  if (missing) {
    warnings.push_back("ordinal column '" + spec.name + "': " +
                       std::to_string(missing) +
                       " missing cells encoded as the lowest level");
  }
  return part;
}

EncodedPart encode_text(const ColumnSpec& spec,
                        std::span<const std::optional<std::string>> col,
                        const SurveySchema& schema, const NmfConfig& base,
                        std::vector<std::string>& warnings) {
  std::vector<std::string> corpus;
  corpus.reserve(col.size());
  for (const auto& v : col) corpus.push_back(v.value_or(""));
  const TfidfResult t = tfidf(corpus, spec.min_df);
  NmfConfig cfg = base;
  cfg.seed = derive_seed(schema.seed, hash_string(spec.name));
  std::size_t zeros = 0;
  EncodedPart part{text_topic_features(t.doc_term, spec.topics, cfg,
                                       schema.topic_scaling, &zeros),
                   {}};
  for (std::size_t j = 0; j < spec.topics; ++j) {
    part.names.push_back(spec.name + ":topic" + std::to_string(j + 1));
  }
  if (zeros) {
    warnings.push_back("text column '" + spec.name + "': " +
                       std::to_string(zeros) +
                       " all-zero topic vectors left unscaled");
  }
  return part;
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::satisfaction: return "satisfaction";
    case ColumnKind::text: return "text";
    case ColumnKind::ordinal: return "ordinal";
    case ColumnKind::demographic: return "demographic";
    case ColumnKind::drop: return "drop";
  }
  return "unknown";
}

ColumnKind parse_column_kind(std::string_view name) {
  for (ColumnKind k : {ColumnKind::categorical, ColumnKind::satisfaction,
                       ColumnKind::text, ColumnKind::ordinal,
                       ColumnKind::demographic, ColumnKind::drop}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown column kind '" + std::string(name) + "'");
}

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::neg: return "neg";
    case Sentiment::neutral: return "neutral";
    case Sentiment::pos: return "pos";
  }
  return "unknown";
}

Sentiment parse_sentiment(std::string_view name) {
  if (name == "pos") return Sentiment::pos;
  if (name == "neg") return Sentiment::neg;
  if (name == "neutral") return Sentiment::neutral;
  throw ValidationError("unknown sentiment '" + std::string(name) +
                        "' (expected pos, neutral or neg)");
}

// ---------------------------------------------------------------- schema

SurveySchema SurveySchema::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("schema JSON: ") + e.what());
  }
  SurveySchema s;
  try {
    if (!j.is_object() || !j.contains("columns") || !j["columns"].is_array()) {
      throw ValidationError("schema must be an object with a 'columns' array");
    }
    for (const auto& c : j["columns"]) {
      ColumnSpec spec;
      spec.name = c.at("name").get<std::string>();
      spec.kind = parse_column_kind(c.at("kind").get<std::string>());
      if (c.contains("choices")) {
        spec.choices = c["choices"].get<std::vector<std::string>>();
      }
      if (c.contains("levels")) {
        spec.choices = c["levels"].get<std::vector<std::string>>();
      }
      if (c.contains("mapping")) {
        for (const auto& [k, v] : c["mapping"].items()) {
          spec.mapping[k] = parse_sentiment(v.get<std::string>());
        }
      }
      if (c.contains("topics")) spec.topics = c["topics"].get<std::size_t>();
      if (c.contains("min_df")) spec.min_df = c["min_df"].get<std::size_t>();
      s.columns.push_back(std::move(spec));
    }
    if (j.contains("id_column")) {
      s.id_column = j["id_column"].get<std::string>();
    }
    if (j.contains("topic_scaling")) {
      const auto v = j["topic_scaling"].get<std::string>();
      if (v == "column") {
        s.topic_scaling = TopicScaling::column_max;
      } else if (v == "row") {
        s.topic_scaling = TopicScaling::row_max;
      } else {
        throw ValidationError("topic_scaling must be 'column' or 'row'");
      }
    }
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("schema: ") + e.what());
  }
  s.validate();
  return s;
}

SurveySchema SurveySchema::load(const std::filesystem::path& path) {
  return from_json(read_text(path));
}

std::string SurveySchema::to_json() const {
  json j;
  j["columns"] = json::array();
  for (const auto& c : columns) {
    json o;
    o["name"] = c.name;
    o["kind"] = std::string(phnmf::to_string(c.kind));
    if (c.kind == ColumnKind::categorical && !c.choices.empty())
      o["choices"] = c.choices;
    if (c.kind == ColumnKind::ordinal) o["levels"] = c.choices;
    if (c.kind == ColumnKind::satisfaction && !c.mapping.empty()) {
      json m = json::object();
      for (const auto& [k, v] : c.mapping) m[k] = std::string(phnmf::to_string(v));
      o["mapping"] = m;
    }
    if (c.kind == ColumnKind::text) {
      o["topics"] = c.topics;
      o["min_df"] = c.min_df;
    }
    j["columns"].push_back(o);
  }
  if (id_column) j["id_column"] = *id_column;
  j["topic_scaling"] =
      topic_scaling == TopicScaling::column_max ? "column" : "row";
  j["seed"] = seed;
  return j.dump(2);
}

void SurveySchema::validate() const {
  std::set<std::string> names;
  for (const auto& c : columns) {
    if (c.name.empty()) throw ValidationError("schema column without a name");
    if (!names.insert(c.name).second) {
      throw ValidationError("schema lists column '" + c.name + "' twice");
    }
    if (c.kind == ColumnKind::text && (c.topics == 0 || c.min_df == 0)) {
      throw ValidationError("text column '" + c.name +
                            "' needs positive topics and min_df");
    }
    if (c.kind == ColumnKind::ordinal && c.choices.size() < 2) {
      throw ValidationError("ordinal column '" + c.name +
                            "' needs at least two levels");
    }
  }
  if (id_column) {
    const ColumnSpec* c = find(*id_column);
    if (!c) {
      throw ValidationError("id_column '" + *id_column +
                            "' is not a schema column");
    }
    if (c->kind != ColumnKind::drop && c->kind != ColumnKind::demographic) {
      throw ValidationError("id_column must be of kind drop or demographic");
    }
  }
}

const ColumnSpec* SurveySchema::find(std::string_view name) const {
  for (const auto& c : columns) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

// ---------------------------------------------------------------- raw table

const std::vector<std::optional<std::string>>& RawTable::column(
    std::string_view name) const {
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == name) return columns[j];
  }
  throw ValidationError("no column '" + std::string(name) + "'");
}

RawTable parse_survey_csv(std::istream& in, const SurveySchema& schema) {
  schema.validate();
  const auto records = parse_csv(in);
  if (records.empty()) throw ParseError("survey CSV has no header row", 1);
  const auto& header = records.front();

  std::vector<std::size_t> position(schema.columns.size(), SIZE_MAX);
  for (std::size_t h = 0; h < header.fields.size(); ++h) {
    const std::string& name = header.fields[h];
    std::size_t found = SIZE_MAX;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      if (schema.columns[c].name == name) found = c;
    }
    if (found == SIZE_MAX) {
      throw ParseError("unknown column '" + name + "' not in schema",
                       header.line);
    }
    if (position[found] != SIZE_MAX) {
      throw ParseError("column '" + name + "' appears twice in header",
                       header.line);
    }
    position[found] = h;
  }
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    if (position[c] == SIZE_MAX) {
      throw ParseError("missing header column '" + schema.columns[c].name +
                           "'",
                       header.line);
    }
  }

  RawTable t;
  for (const auto& c : schema.columns) t.names.push_back(c.name);
  t.columns.resize(schema.columns.size());
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.fields.size()) {
      throw ParseError("row has " + std::to_string(rec.fields.size()) +
                           " fields, header has " +
                           std::to_string(header.fields.size()),
                       rec.line);
    }
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const std::string& cell = rec.fields[position[c]];
      const bool blank = std::all_of(cell.begin(), cell.end(), [](char ch) {
        return std::isspace(static_cast<unsigned char>(ch));
      });
      t.columns[c].push_back(blank ? std::nullopt
                                   : std::optional<std::string>(cell));
    }
    t.lines.push_back(rec.line);
  }
  return t;
}

RawTable load_csv(const std::filesystem::path& path,
                  const SurveySchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_survey_csv(in, schema);
}

// ---------------------------------------------------------------- encoders

std::map<std::string, Sentiment> default_satisfaction_mapping() {
  using S = Sentiment;
  return {
      {"very satisfied", S::pos},
      {"satisfied", S::pos},
      {"neutral", S::neutral},
      {"don't know", S::neutral},
      {"dont know", S::neutral},
      {"not sure", S::neutral},
      {"", S::neutral},
      {"dissatisfied", S::neg},
      {"very dissatisfied", S::neg},
      {"strongly agree", S::pos},
      {"agree", S::pos},
      {"neither agree nor disagree", S::neutral},
      {"disagree", S::neg},
      {"strongly disagree", S::neg},
  };
}

std::vector<Sentiment> consolidate_satisfaction(
    std::span<const std::optional<std::string>> column,
    const std::map<std::string, Sentiment>& mapping) {
  std::map<std::string, Sentiment> norm;
  for (const auto& [k, v] : mapping) norm[normalize_key(k)] = v;
  std::vector<Sentiment> out(column.size(), Sentiment::neutral);
  std::vector<std::string> unmapped;
  for (std::size_t r = 0; r < column.size(); ++r) {
    const std::string key = column[r] ? normalize_key(*column[r]) : "";
    const auto it = norm.find(key);
    if (it != norm.end()) {
      out[r] = it->second;
    } else if (!column[r] || key.empty()) {
      out[r] = Sentiment::neutral;
    } else if (std::find(unmapped.begin(), unmapped.end(), *column[r]) ==
               unmapped.end()) {
      unmapped.push_back(*column[r]);
    }
  }
  if (!unmapped.empty()) {
    throw ValidationError("unmapped satisfaction values: " + join(unmapped));
  }
  return out;
}

Matrix indicator_encode(std::span<const Sentiment> column) {
  Matrix out(column.size(), 2);
  for (std::size_t r = 0; r < column.size(); ++r) {
    if (column[r] == Sentiment::pos) out(r, 0) = 1.0;
    if (column[r] == Sentiment::neg) out(r, 1) = 1.0;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TfidfResult tfidf(std::span<const std::string> corpus, std::size_t min_df) {
  if (corpus.empty()) throw ValidationError("tfidf: empty corpus");
  if (min_df == 0) throw ValidationError("tfidf: min_df must be positive");
  std::vector<std::map<std::string, std::size_t>> counts(corpus.size());
  std::map<std::string, std::size_t> df;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (auto& tok : tokenize(corpus[d])) ++counts[d][tok];
    for (const auto& [tok, n] : counts[d]) ++df[tok];
  }
  TfidfResult out;
  std::map<std::string, std::size_t> column;
  for (const auto& [tok, n] : df) {
    if (n >= min_df) {
      column[tok] = out.vocab.size();
      out.vocab.push_back(tok);
    }
  }
  if (out.vocab.empty()) {
    throw ValidationError("tfidf: vocabulary is empty after min_df filtering");
  }
  const double n_docs = static_cast<double>(corpus.size());
  std::vector<double> idf(out.vocab.size());
  for (std::size_t j = 0; j < out.vocab.size(); ++j) {
    idf[j] = std::log((1.0 + n_docs) /
                      (1.0 + static_cast<double>(df[out.vocab[j]]))) +
             1.0;
  }
  out.doc_term = Matrix(corpus.size(), out.vocab.size());
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    double sq = 0.0;
    for (const auto& [tok, n] : counts[d]) {
      const auto it = column.find(tok);
      if (it == column.end()) continue;
      const double v = static_cast<double>(n) * idf[it->second];
      out.doc_term(d, it->second) = v;
      sq += v * v;
    }
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (double& v : out.doc_term.row(d)) v *= inv;
    }
  }
  return out;
}

namespace {

struct DistinctRows {
  /// One representative input row per distinct row, in sorted row order.
  std::vector<std::size_t> rows;
  std::vector<std::size_t> count;
  /// Input row -> index into `rows`.
  std::vector<std::size_t> slot;
};

DistinctRows distinct_rows(const Matrix& m) {
  std::vector<std::size_t> order(m.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto less = [&](std::size_t a, std::size_t b) {
    const auto ra = m.row(a), rb = m.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::stable_sort(order.begin(), order.end(), less);
  DistinctRows d;
  d.slot.resize(m.rows());
  for (std::size_t p = 0; p < order.size(); ++p) {
    if (p == 0 || less(order[p - 1], order[p])) {
      d.rows.push_back(order[p]);
      d.count.push_back(0);
    }
    ++d.count.back();
    d.slot[order[p]] = d.rows.size() - 1;
  }
  return d;
}

}  // namespace

Matrix text_topic_features(const Matrix& doc_term, std::size_t k,
                           const NmfConfig& config, TopicScaling scaling,
                           std::size_t* zero_count) {
  NmfConfig cfg = config;
  cfg.rank = k;
  const DistinctRows distinct = distinct_rows(doc_term);
  const std::size_t n_distinct = distinct.rows.size();
  if (k == 0 || k > std::min(n_distinct, doc_term.cols())) {
    throw ShapeError("text_topic_features: rank " + std::to_string(k) +
                     " exceeds min(" + std::to_string(n_distinct) +
                     " distinct documents, " + std::to_string(doc_term.cols()) +
                     " terms)");
  }
  // Factor each distinct document once, weighted by sqrt(multiplicity).
  // This is the update sequence of the full matrix with duplicate rows
  // tied together, and it does not depend on the input row order.
  Matrix unique(n_distinct, doc_term.cols());
  for (std::size_t u = 0; u < n_distinct; ++u) {
    const double s = std::sqrt(static_cast<double>(distinct.count[u]));
    const auto src = doc_term.row(distinct.rows[u]);
    auto dst = unique.row(u);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = s * src[j];
  }
  const Matrix wu = nmf(unique, cfg).W;
  Matrix w(doc_term.rows(), k);
  for (std::size_t i = 0; i < doc_term.rows(); ++i) {
    const std::size_t u = distinct.slot[i];
    const double s = std::sqrt(static_cast<double>(distinct.count[u]));
    for (std::size_t j = 0; j < k; ++j) w(i, j) = wu(u, j) / s;
  }
  std::size_t zeros = 0;
  if (scaling == TopicScaling::column_max) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double mx = 0.0;
      for (std::size_t i = 0; i < w.rows(); ++i) mx = std::max(mx, w(i, j));
      if (mx > 0.0) {
        for (std::size_t i = 0; i < w.rows(); ++i) w(i, j) /= mx;
      } else {
        ++zeros;
      }
    }
  } else {
    for (std::size_t i = 0; i < w.rows(); ++i) {
      auto row = w.row(i);
      const double mx = *std::max_element(row.begin(), row.end());
      if (mx > 0.0) {
        for (double& v : row) v /= mx;
      } else {
        ++zeros;
      }
    }
  }
  if (zero_count) *zero_count = zeros;
  return w;
}

// ---------------------------------------------------------------- assembly

EncodedSurvey assemble(std::span<const EncodedPart> parts, std::size_t rows) {
  EncodedSurvey out;
  std::vector<Matrix> blocks;
  for (const auto& p : parts) {
    if (p.X.rows() != rows) {
      throw ShapeError("assemble: part with " + std::to_string(p.X.rows()) +
                       " rows, expected " + std::to_string(rows));
    }
    if (p.names.size() != p.X.cols()) {
      throw ShapeError("assemble: part has " + std::to_string(p.X.cols()) +
                       " columns but " + std::to_string(p.names.size()) +
                       " names");
    }
    blocks.push_back(p.X);
    out.feature_names.insert(out.feature_names.end(), p.names.begin(),
                             p.names.end());
  }
  out.X = blocks.empty() ? Matrix(rows, 0) : hstack(blocks);
  return out;
}

EncodedSurvey encode_survey(const RawTable& table, const SurveySchema& schema,
                            const NmfConfig& text_nmf) {
  schema.validate();
  std::vector<EncodedPart> parts;
  std::vector<std::string> warnings;
  std::vector<std::string> demo_names;
  std::vector<std::vector<std::string>> demo;

  for (const auto& spec : schema.columns) {
    const auto& col = table.column(spec.name);
    switch (spec.kind) {
      case ColumnKind::categorical:
        parts.push_back(encode_categorical(spec, col));
        break;
      case ColumnKind::satisfaction: {
        const auto mapping = spec.mapping.empty()
                                 ? default_satisfaction_mapping()
                                 : spec.mapping;
        EncodedPart p{indicator_encode(consolidate_satisfaction(col, mapping)),
                      {spec.name + ":pos", spec.name + ":neg"}};
        parts.push_back(std::move(p));
        break;
      }
      case ColumnKind::text:
        parts.push_back(encode_text(spec, col, schema, text_nmf, warnings));
        break;
      case ColumnKind::ordinal:
        parts.push_back(encode_ordinal(spec, col, warnings));
        break;
      case ColumnKind::demographic: {
        demo_names.push_back(spec.name);
        std::vector<std::string> values;
        values.reserve(col.size());
        for (const auto& v : col) values.push_back(v.value_or(""));
        demo.push_back(std::move(values));
        break;
      }
      case ColumnKind::drop:
        break;
    }
  }

  EncodedSurvey out = assemble(parts, table.rows());
  out.demographic_names = std::move(demo_names);
  out.demographics = std::move(demo);
  out.warnings = std::move(warnings);
  if (schema.id_column) {
    for (const auto& v : table.column(*schema.id_column))
      out.row_ids.push_back(v.value_or(""));
  } else {
    for (std::size_t r = 0; r < table.rows(); ++r)
      out.row_ids.push_back(std::to_string(r + 1));
  }
  return out;
}

void export_encoded(const std::filesystem::path& dir,
                    const EncodedSurvey& survey) {
  save_matrix(dir / "X.csv", survey.X);
  std::string names;
  for (const auto& n : survey.feature_names) names += n + "\n";
  write_text(dir / "feature_names.txt", names);

  std::ostringstream demo;
  demo << "row_id";
  for (const auto& n : survey.demographic_names) demo << ',' << csv_escape(n);
  demo << '\n';
  for (std::size_t r = 0; r < survey.row_ids.size(); ++r) {
    demo << csv_escape(survey.row_ids[r]);
    for (const auto& col : survey.demographics) demo << ',' << csv_escape(col[r]);
    demo << '\n';
  }
  write_text(dir / "demographics.csv", demo.str());
}

}  // namespace phnmf
