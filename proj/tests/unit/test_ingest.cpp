#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <span>
#include <sstream>

#include "phnmf/csv.hpp"
#include "phnmf/error.hpp"
#include "phnmf/ingest.hpp"
#include "phnmf/linalg.hpp"
#include "phnmf/matrix_io.hpp"
#include "phnmf/rng.hpp"

using namespace phnmf;
namespace fs = std::filesystem;

namespace {

const fs::path kData = PHNMF_TEST_DATA;

SurveySchema small_schema() {
  return SurveySchema::from_json(R"({
    "columns": [
      {"name": "id", "kind": "drop"},
      {"name": "q", "kind": "satisfaction"},
      {"name": "note", "kind": "text", "topics": 1, "min_df": 1}
    ]})");
}

std::size_t column_index(const EncodedSurvey& s, const std::string& name) {
  const auto it = std::find(s.feature_names.begin(), s.feature_names.end(), name);
  REQUIRE(it != s.feature_names.end());
  return static_cast<std::size_t>(it - s.feature_names.begin());
}

int parse_error_line(const std::string& text, const SurveySchema& schema) {
  std::istringstream in(text);
  try {
    parse_survey_csv(in, schema);
  } catch (const ParseError& e) {
    return static_cast<int>(e.line());
  }
  return -1;
}

}  // namespace

TEST_CASE("csv records honour quoting") {
  std::istringstream in("a,b,c\r\n\"x, y\",\"say \"\"hi\"\"\",\n\n\"two\nlines\",2,3\n");
  const auto recs = parse_csv(in);
  REQUIRE(recs.size() == 3);
  CHECK(recs[1].fields == std::vector<std::string>{"x, y", "say \"hi\"", ""});
  CHECK(recs[1].line == 2);
  CHECK(recs[2].fields[0] == "two\nlines");
  CHECK(recs[2].line == 4);

  std::istringstream bad1("a,b\"c\n");
  CHECK_THROWS_AS(parse_csv(bad1), ParseError);
  std::istringstream bad2("\"a\"b\n");
  CHECK_THROWS_AS(parse_csv(bad2), ParseError);
  std::istringstream bad3("\"open\n");
  CHECK_THROWS_AS(parse_csv(bad3), ParseError);

  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"") == "\"q\"\"\"");
}

TEST_CASE("survey csv loads typed records") {
  const auto schema = small_schema();
  std::istringstream in("id,q,note\n1,Satisfied,\"hello, world\"\n2,,x\n3,Neutral,\n");
  const RawTable t = parse_survey_csv(in, schema);
  CHECK(t.rows() == 3);
  CHECK(t.lines == std::vector<std::size_t>{2, 3, 4});
  CHECK(*t.column("note")[0] == "hello, world");
  CHECK_FALSE(t.column("q")[1].has_value());
  CHECK_FALSE(t.column("note")[2].has_value());
  CHECK_THROWS_AS(t.column("nope"), ValidationError);
}

TEST_CASE("survey csv header and row errors") {
  const auto schema = small_schema();
  std::istringstream missing("id,q\n1,Satisfied\n");
  try {
    parse_survey_csv(missing, schema);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("note") != std::string::npos);
  }
  std::istringstream unknown("id,q,note,extra\n1,Satisfied,x,y\n");
  try {
    parse_survey_csv(unknown, schema);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("extra") != std::string::npos);
    CHECK(e.line() == 1);
  }
  CHECK(parse_error_line("id,q,note\n1,Satisfied,x\n2,Neutral\n", schema) == 3);
  CHECK(parse_error_line("id,q,note,q\n", schema) == 1);
  CHECK_THROWS_AS(load_csv(kData / "does_not_exist.csv", schema), IoError);
}

TEST_CASE("satisfaction consolidation") {
  const auto m = default_satisfaction_mapping();
  const std::vector<std::optional<std::string>> col{
      "Very Satisfied", "satisfied ", "Neutral", "Don't Know", std::nullopt,
      "Dissatisfied", "VERY DISSATISFIED", "Don’t know", "Agree"};
  const auto s = consolidate_satisfaction(col, m);
  const std::vector<Sentiment> want{Sentiment::pos, Sentiment::pos,
                                    Sentiment::neutral, Sentiment::neutral,
                                    Sentiment::neutral, Sentiment::neg,
                                    Sentiment::neg, Sentiment::neutral,
                                    Sentiment::pos};
  CHECK(s == want);

  const std::vector<std::optional<std::string>> odd{"Satisfied", "Maybe", "Sort of"};
  try {
    consolidate_satisfaction(odd, m);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("Maybe") != std::string::npos);
    CHECK(msg.find("Sort of") != std::string::npos);
  }

  std::map<std::string, Sentiment> custom{{"yes", Sentiment::pos}, {"no", Sentiment::neg}};
  const std::vector<std::optional<std::string>> yn{"Yes", std::nullopt, "no"};
  CHECK(consolidate_satisfaction(yn, custom) ==
        std::vector<Sentiment>{Sentiment::pos, Sentiment::neutral, Sentiment::neg});
}

TEST_CASE("indicator encoding") {
  const std::vector<Sentiment> col{Sentiment::pos, Sentiment::neutral, Sentiment::neg};
  const Matrix x = indicator_encode(col);
  CHECK(x == Matrix::from_rows({{1, 0}, {0, 0}, {0, 1}}));
  for (std::size_t i = 0; i < x.rows(); ++i) CHECK(x(i, 0) + x(i, 1) <= 1.0);
}

TEST_CASE("tokenizer") {
  CHECK(tokenize("A cat, a DOG!  x2") ==
        std::vector<std::string>{"a", "cat", "a", "dog", "x2"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("--").empty());
}

TEST_CASE("tfidf two-document reference") {
  const std::vector<std::string> corpus{"a b", "a"};
  const auto t = tfidf(corpus, 1);
  CHECK(t.vocab == std::vector<std::string>{"a", "b"});
  CHECK(std::abs(t.doc_term(0, 0) - 0.5797386715376657) < 1e-12);
  CHECK(std::abs(t.doc_term(0, 1) - 0.8148024746671689) < 1e-12);
  CHECK(std::abs(t.doc_term(1, 0) - 1.0) < 1e-12);
  CHECK(t.doc_term(1, 1) == 0.0);
  // idf(b) = ln(3/2) + 1 relative to idf(a) = 1.
  CHECK(std::abs(t.doc_term(0, 1) / t.doc_term(0, 0) - 1.4054651081081644) < 1e-12);
}

TEST_CASE("tfidf with a document-frequency floor") {
  const std::vector<std::string> corpus{"The cat sat", "the dog sat", "a cat, a dog!", ""};
  const auto t = tfidf(corpus, 2);
  CHECK(t.vocab == std::vector<std::string>{"cat", "dog", "sat", "the"});
  const double r3 = 0.5773502691896257, r2 = 0.7071067811865475;
  const Matrix want = Matrix::from_rows(
      {{r3, 0, r3, r3}, {0, r3, r3, r3}, {r2, r2, 0, 0}, {0, 0, 0, 0}});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(std::abs(t.doc_term(i, j) - want(i, j)) < 1e-12);
}

TEST_CASE("tfidf rows have unit norm") {
  const std::vector<std::string> corpus{"x y z x", "y y", "z", "x y", "same", "same", ""};
  const auto t = tfidf(corpus, 1);
  for (std::size_t i = 0; i < t.doc_term.rows(); ++i) {
    double s = 0.0;
    for (double v : t.doc_term.row(i)) s += v * v;
    if (i == 6) {
      CHECK(s == 0.0);
    } else {
      CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-12);
    }
  }
  const auto r4 = t.doc_term.row(4), r5 = t.doc_term.row(5);
  CHECK(std::equal(r4.begin(), r4.end(), r5.begin()));
  CHECK_THROWS_AS(tfidf(std::vector<std::string>{}, 1), ValidationError);
  CHECK_THROWS_AS(tfidf(std::vector<std::string>{"a", "b"}, 2), ValidationError);
}

TEST_CASE("text topics separate disjoint vocabularies") {
  const std::vector<std::string> corpus{
      "apple banana", "banana cherry apple", "cherry apple", "apple banana cherry",
      "rock stone", "stone gravel", "gravel rock stone", "rock gravel"};
  const auto t = tfidf(corpus, 1);
  NmfConfig c;
  c.seed = 4;
  const Matrix w = text_topic_features(t.doc_term, 2, c);
  for (std::size_t j = 0; j < 2; ++j) {
    double mx = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) mx = std::max(mx, w(i, j));
    CHECK(mx == doctest::Approx(1.0).epsilon(1e-15));
  }
  auto top = [&](std::size_t i) { return w(i, 0) >= w(i, 1) ? 0 : 1; };
  for (std::size_t i = 1; i < 4; ++i) CHECK(top(i) == top(0));
  for (std::size_t i = 5; i < 8; ++i) CHECK(top(i) == top(4));
  CHECK(top(0) != top(4));

  const Matrix rows = text_topic_features(t.doc_term, 2, c, TopicScaling::row_max);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    CHECK(std::max(rows(i, 0), rows(i, 1)) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(text_topic_features(t.doc_term, 9, c), ShapeError);
}

TEST_CASE("text topics with rank one and empty documents") {
  const std::vector<std::string> corpus{"a b", "a", "", "b b a"};
  const auto t = tfidf(corpus, 1);
  std::size_t zeros = 99;
  NmfConfig c;
  const Matrix w = text_topic_features(t.doc_term, 1, c, TopicScaling::row_max, &zeros);
  CHECK(w.cols() == 1);
  CHECK(w(2, 0) == 0.0);
  CHECK(zeros == 1);
}

TEST_CASE("text topics do not depend on row order") {
  const std::vector<std::string> corpus{
      "apple banana", "rock stone", "banana cherry", "stone gravel", "",
      "apple banana", "gravel rock", "cherry apple", "rock stone", ""};
  std::vector<std::size_t> perm(corpus.size());
  std::iota(perm.begin(), perm.end(), 0);
  SeededRng rng(3);
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::string> shuffled;
  for (std::size_t i : perm) shuffled.push_back(corpus[i]);
  NmfConfig c;
  c.seed = 12;
  const Matrix a = text_topic_features(tfidf(corpus, 1).doc_term, 2, c);
  const Matrix b = text_topic_features(tfidf(shuffled, 1).doc_term, 2, c);
  CHECK(select_rows(a, perm) == b);
  // Duplicate documents share a row.
  const auto r0 = a.row(0), r5 = a.row(5);
  CHECK(std::equal(r0.begin(), r0.end(), r5.begin()));
}

TEST_CASE("assemble concatenates parts") {
  std::vector<EncodedPart> parts{{Matrix(4, 3, 1.0), {"a", "b", "c"}},
                                 {Matrix(4, 2, 0.5), {"d", "e"}}};
  const auto s = assemble(parts, 4);
  CHECK(s.X.cols() == 5);
  CHECK(s.feature_names == std::vector<std::string>{"a", "b", "c", "d", "e"});
  CHECK(s.X(2, 3) == 0.5);
  CHECK_THROWS_AS(assemble(parts, 5), ShapeError);
  std::vector<EncodedPart> bad{{Matrix(4, 2), {"a"}}};
  CHECK_THROWS_AS(assemble(bad, 4), ShapeError);
}

TEST_CASE("schema parsing and validation") {
  const auto s = SurveySchema::load(kData / "toy_schema.json");
  CHECK(s.columns.size() == 8);
  CHECK(s.id_column == std::optional<std::string>("respondent"));
  CHECK(s.seed == 7);
  REQUIRE(s.find("visits") != nullptr);
  CHECK(s.find("visits")->kind == ColumnKind::ordinal);
  CHECK(s.find("visits")->choices ==
        std::vector<std::string>{"never", "sometimes", "often"});
  CHECK(s.find("nothing") == nullptr);

  const auto again = SurveySchema::from_json(s.to_json());
  CHECK(again.to_json() == s.to_json());

  CHECK_THROWS_AS(SurveySchema::from_json(
                      R"({"columns": [{"name": "a", "kind": "drop"},
                                      {"name": "a", "kind": "text"}]})"),
                  ValidationError);
  CHECK_THROWS_AS(SurveySchema::from_json(R"({"columns": [{"name": "a", "kind": "weird"}]})"),
                  ValidationError);
  CHECK_THROWS_AS(SurveySchema::from_json(
                      R"({"id_column": "q", "columns": [{"name": "q", "kind": "satisfaction"}]})"),
                  ValidationError);
  CHECK_THROWS_AS(SurveySchema::from_json("{not json"), ParseError);
  CHECK(parse_column_kind("demographic") == ColumnKind::demographic);
  CHECK(parse_sentiment("neg") == Sentiment::neg);
}

TEST_CASE("toy survey encoding") {
  const auto schema = SurveySchema::load(kData / "toy_schema.json");
  const RawTable table = load_csv(kData / "toy_survey.csv", schema);
  CHECK(table.rows() == 20);
  const EncodedSurvey s = encode_survey(table, schema);

  CHECK(s.feature_names ==
        std::vector<std::string>{"q_city:pos", "q_city:neg", "q_parks:pos",
                                 "q_parks:neg", "transport=bike", "transport=bus",
                                 "transport=car", "visits", "comment:topic1",
                                 "comment:topic2"});
  CHECK(s.X.rows() == 20);
  CHECK(s.X.cols() == s.feature_names.size());
  CHECK(s.X.all_nonnegative());
  CHECK(s.row_ids.front() == "r01");
  CHECK(s.row_ids.back() == "r20");

  // Demographics stay out of X.
  CHECK(s.demographic_names == std::vector<std::string>{"age_band"});
  CHECK(s.demographics[0][2] == "55+");
  for (const auto& n : s.feature_names) CHECK(n.find("age_band") == std::string::npos);
  for (const auto& n : s.feature_names) CHECK(n.find("zip") == std::string::npos);

  const auto pos = column_index(s, "q_city:pos"), neg = column_index(s, "q_city:neg");
  CHECK(s.X(0, pos) == 1.0);   // Very Satisfied
  CHECK(s.X(4, neg) == 1.0);   // Very Dissatisfied
  CHECK(s.X(5, pos) + s.X(5, neg) == 0.0);  // Don't Know
  CHECK(s.X(6, pos) + s.X(6, neg) == 0.0);  // missing
  CHECK(s.X(12, pos) == 1.0);  // quoted value

  CHECK(s.X(1, column_index(s, "transport=car")) == 1.0);
  const auto visits = column_index(s, "visits");
  CHECK(s.X(0, visits) == 1.0);
  CHECK(s.X(1, visits) == 0.5);
  CHECK(s.X(2, visits) == 0.0);
  CHECK(s.X(7, visits) == 0.0);  // missing level
  CHECK(std::any_of(s.warnings.begin(), s.warnings.end(), [](const std::string& w) {
    return w.find("visits") != std::string::npos;
  }));

  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      const double v = s.X(i, j);
      if (j == visits) continue;
      CHECK((v == 0.0 || v == 1.0));
    }
  }
  // Parks comments and road comments load on different topics.
  const auto t1 = column_index(s, "comment:topic1"), t2 = column_index(s, "comment:topic2");
  auto topic = [&](std::size_t i) { return s.X(i, t1) >= s.X(i, t2) ? 1 : 2; };
  CHECK(topic(0) == topic(3));
  CHECK(topic(1) == topic(2));
  CHECK(topic(0) != topic(1));
  CHECK(s.X(15, t1) + s.X(15, t2) == 0.0);  // blank comment
}

TEST_CASE("encoding rejects bad values") {
  const auto schema = SurveySchema::from_json(R"({"columns": [
      {"name": "c", "kind": "categorical", "choices": ["x", "y"]},
      {"name": "o", "kind": "ordinal", "levels": ["lo", "hi"]}]})");
  std::istringstream bad_choice("c,o\nx,lo\nz,hi\n");
  CHECK_THROWS_AS(encode_survey(parse_survey_csv(bad_choice, schema), schema),
                  ValidationError);
  std::istringstream bad_level("c,o\nx,lo\ny,mid\n");
  CHECK_THROWS_AS(encode_survey(parse_survey_csv(bad_level, schema), schema),
                  ValidationError);
  std::istringstream ok("c,o\nx,lo\ny,hi\n");
  const auto s = encode_survey(parse_survey_csv(ok, schema), schema);
  CHECK(s.row_ids == std::vector<std::string>{"1", "2"});
  CHECK(s.X == Matrix::from_rows({{1, 0, 0}, {0, 1, 1}}));
}

TEST_CASE("encoding is order stable") {
  const auto schema = SurveySchema::load(kData / "toy_schema.json");
  const auto records = read_csv_records(kData / "toy_survey.csv");
  std::vector<std::size_t> perm(records.size() - 1);
  std::iota(perm.begin(), perm.end(), 0);
  SeededRng rng(21);
  rng.shuffle(std::span<std::size_t>(perm));

  std::ostringstream text;
  auto write = [&](const CsvRecord& r) {
    for (std::size_t j = 0; j < r.fields.size(); ++j) {
      text << (j ? "," : "") << csv_escape(r.fields[j]);
    }
    text << "\n";
  };
  write(records[0]);
  for (std::size_t i : perm) write(records[i + 1]);
  std::istringstream in(text.str());

  const auto a = encode_survey(load_csv(kData / "toy_survey.csv", schema), schema);
  const auto b = encode_survey(parse_survey_csv(in, schema), schema);
  CHECK(select_rows(a.X, perm) == b.X);
  CHECK(b.feature_names == a.feature_names);
  for (std::size_t r = 0; r < perm.size(); ++r) CHECK(b.row_ids[r] == a.row_ids[perm[r]]);
}

TEST_CASE("encoded survey export round trip") {
  const auto schema = SurveySchema::load(kData / "toy_schema.json");
  const auto s = encode_survey(load_csv(kData / "toy_survey.csv", schema), schema);
  const auto dir = fs::temp_directory_path() / "phnmf_test_ingest";
  fs::remove_all(dir);
  export_encoded(dir, s);
  CHECK(read_csv(dir / "X.csv") == s.X);
  const std::string names = read_text(dir / "feature_names.txt");
  CHECK(names.rfind("q_city:pos\nq_city:neg\n", 0) == 0);
  const auto demo = read_csv_records(dir / "demographics.csv");
  REQUIRE(demo.size() == 21);
  CHECK(demo[0].fields == std::vector<std::string>{"row_id", "age_band"});
  CHECK(demo[1].fields == std::vector<std::string>{"r01", "18-34"});
}
