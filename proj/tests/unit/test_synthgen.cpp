#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "phnmf/error.hpp"
#include "phnmf/linalg.hpp"
#include "phnmf/matrix_io.hpp"
#include "phnmf/synthgen.hpp"

using namespace phnmf;

namespace {

void check_trunc_moments(double mu, double sigma2, double mean, double sd,
                         std::uint64_t seed) {
  SeededRng rng(seed);
  const int n = 20000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_trunc_normal(mu, sigma2, rng);
    CHECK(v > 0.0);
    sum += v;
  }
  const double se = sd / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sum / n - mean) <= 3.0 * se);
}

}  // namespace

TEST_CASE("group labels and paths") {
  const auto& names = synthetic_group_labels();
  CHECK(names[0] == "1a1");
  CHECK(names[5] == "2a2");
  CHECK(names[7] == "2b2");
  CHECK(parse_dataset_kind("categorical") == DatasetKind::categorical);
  CHECK(to_string(DatasetKind::continuous) == "continuous");
  CHECK_THROWS_AS(parse_dataset_kind("ordinal"), ValidationError);
}

TEST_CASE("truncated normal closed-form mean") {
  CHECK(trunc_normal_mean(3.0, 9.0) ==
        doctest::Approx(3.862799912817535).epsilon(1e-12));
  CHECK(trunc_normal_mean(64.0, 9.0) == doctest::Approx(64.0).epsilon(1e-12));
}

TEST_CASE("truncated normal draws match the closed form") {
  check_trunc_moments(64.0, 9.0, 64.0, 3.0, 1);
  check_trunc_moments(45.0, 9.0, 45.0, 3.0, 2);
  check_trunc_moments(50.0, 9.0, 50.0, 3.0, 3);
  check_trunc_moments(3.0, 9.0, 3.862799912817535, 2.3805832419786226, 4);
}

TEST_CASE("truncated normal rejects hopeless parameters") {
  SeededRng rng(1);
  CHECK_THROWS_AS(sample_trunc_normal(1.0, 0.0, rng), ValidationError);
  CHECK_THROWS_AS(sample_trunc_normal(-50.0, 1.0, rng), ValidationError);
}

TEST_CASE("continuous dataset shape and exact low rank") {
  const auto d = generate(SyntheticSpec::continuous(1));
  CHECK(d.X.rows() == 1600);
  CHECK(d.X.cols() == 120);
  CHECK(d.W_true.rows() == 1600);
  CHECK(d.W_true.cols() == 4);
  CHECK(d.H_true.rows() == 4);
  CHECK(d.H_true.cols() == 120);
  CHECK(d.thetas.rows() == 8);
  CHECK(d.y.size() == 1600);
  CHECK(d.X == matmul(d.W_true, d.H_true));
  CHECK(d.X.all_nonnegative());
  CHECK(d.W_true.all_nonnegative());

  const auto s = singular_values(d.X);
  REQUIRE(s.size() >= 5);
  CHECK(s[4] < 1e-8 * s[0]);
  CHECK(s[3] > 1e-3 * s[0]);
}

TEST_CASE("H columns are multinomial proportions") {
  const auto d = generate(SyntheticSpec::continuous(2));
  for (std::size_t j = 0; j < d.H_true.cols(); ++j) {
    double sum = 0.0;
    for (std::size_t t = 0; t < 4; ++t) {
      const double v = d.H_true(t, j);
      CHECK(v * 100.0 == doctest::Approx(std::round(v * 100.0)));
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0));
  }
  // Owner share averages 4/7 of the trials.
  double owner = 0.0;
  for (std::size_t j = 0; j < d.H_true.cols(); ++j) {
    owner += d.H_true(d.column_topic[j], j);
  }
  CHECK(std::abs(owner / 120.0 - 4.0 / 7.0) < 0.02);
}

TEST_CASE("labels, groups and response") {
  const auto d = generate(SyntheticSpec::continuous(3));
  const auto& names = synthetic_group_labels();
  for (std::size_t g = 0; g < 8; ++g) {
    CHECK(std::count(d.labels.begin(), d.labels.end(), names[g]) == 200);
  }
  CHECK(d.labels[0] == "1a1");
  CHECK(d.labels[1599] == "2b2");
  CHECK(d.hierarchy_path[450] == std::vector<std::string>{"1", "1b", "1b1"});
  for (std::size_t i = 0; i < 1600; i += 97) {
    CHECK(d.group_index[i] == i / 200);
    CHECK(d.y[i] == doctest::Approx(dot(d.W_true.row(i),
                                        d.thetas.row(d.group_index[i]))));
  }
  for (double v : d.thetas.values()) {
    CHECK(v >= 0.5);
    CHECK(v <= 2.0);
  }
  // Topic 1 separates 1.. from 2.. groups.
  double hi = 0.0, lo = 0.0;
  for (std::size_t i = 0; i < 800; ++i) hi += d.W_true(i, 0);
  for (std::size_t i = 800; i < 1600; ++i) lo += d.W_true(i, 0);
  CHECK(hi / 800 > 60.0);
  CHECK(lo / 800 < 5.0);
}

TEST_CASE("categorical dataset is binary and median split") {
  const auto c = generate(SyntheticSpec::categorical(1));
  CHECK(c.X.rows() == 1600);
  CHECK(c.X.cols() == 120);
  for (double v : c.X.values()) CHECK((v == 0.0 || v == 1.0));
  CHECK(c.spec.topic_word_counts == std::vector<std::size_t>{65, 30, 20, 5});
  // Each topic block is thresholded at its own median: half ones.
  std::vector<double> ones(4, 0.0), cells(4, 0.0);
  for (std::size_t i = 0; i < c.X.rows(); ++i) {
    for (std::size_t j = 0; j < c.X.cols(); ++j) {
      ones[c.column_topic[j]] += c.X(i, j);
      cells[c.column_topic[j]] += 1.0;
    }
  }
  for (std::size_t t = 0; t < 4; ++t) CHECK(ones[t] == cells[t] / 2.0);

  const auto k = generate(SyntheticSpec::continuous(1));
  CHECK(c.W_true == k.W_true);
  CHECK(c.thetas == k.thetas);
  CHECK(c.y == k.y);
  CHECK_FALSE(c.H_true == k.H_true);
}

TEST_CASE("generation is deterministic per seed") {
  const auto a = generate(SyntheticSpec::continuous(9));
  const auto b = generate(SyntheticSpec::continuous(9));
  const auto c = generate(SyntheticSpec::continuous(10));
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);
  CHECK_FALSE(a.X == c.X);
}

TEST_CASE("shuffled columns keep the factorization") {
  auto spec = SyntheticSpec::continuous(4);
  spec.shuffle_columns = true;
  const auto s = generate(spec);
  const auto p = generate(SyntheticSpec::continuous(4));
  CHECK(s.X == matmul(s.W_true, s.H_true));
  CHECK(s.W_true == p.W_true);
  CHECK_FALSE(s.column_topic == p.column_topic);
  std::multiset<std::size_t> a(s.column_topic.begin(), s.column_topic.end());
  std::multiset<std::size_t> b(p.column_topic.begin(), p.column_topic.end());
  CHECK(a == b);
  for (std::size_t j = 0; j < s.X.cols(); ++j) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < 4; ++t) {
      if (s.H_true(t, j) > s.H_true(best, j)) best = t;
    }
    CHECK(best == s.column_topic[j]);
  }
}

TEST_CASE("spec validation") {
  auto spec = SyntheticSpec::continuous(1);
  spec.topic_word_counts = {30, 30, 30};
  CHECK_THROWS_AS(generate(spec), ValidationError);
  spec = SyntheticSpec::continuous(1);
  spec.n_per_group = 0;
  CHECK_THROWS_AS(generate(spec), ValidationError);
  spec = SyntheticSpec::continuous(1);
  spec.theta_low = 3.0;
  CHECK_THROWS_AS(generate(spec), ValidationError);

  spec = SyntheticSpec::continuous(1);
  spec.n_per_group = 5;
  spec.topic_word_counts = {3, 4, 5, 6};
  const auto d = generate(spec);
  CHECK(d.X.rows() == 40);
  CHECK(d.X.cols() == 18);
  CHECK(spec.n_cols() == 18);
}

TEST_CASE("gen_response shape errors") {
  const Matrix w(3, 2, 1.0);
  const Matrix t(2, 2, 1.0);
  CHECK_THROWS_AS(gen_response(w, t, std::vector<std::size_t>{0, 1}),
                  ShapeError);
  CHECK_THROWS_AS(gen_response(w, Matrix(2, 3), std::vector<std::size_t>{0, 1, 0}),
                  ShapeError);
  CHECK_THROWS_AS(gen_response(w, t, std::vector<std::size_t>{0, 1, 2}),
                  ShapeError);
  CHECK(gen_response(w, t, std::vector<std::size_t>{0, 1, 0}) ==
        std::vector<double>{2, 2, 2});
}

TEST_CASE("export writes every artifact") {
  const auto dir = std::filesystem::temp_directory_path() / "phnmf_test_synth";
  std::filesystem::remove_all(dir);
  auto spec = SyntheticSpec::categorical(2);
  spec.n_per_group = 4;
  const auto d = generate(spec);
  export_dataset(dir, d);
  for (const char* f : {"X.csv", "labels.csv", "W_true.csv", "H_true.csv",
                        "thetas.csv", "y.csv", "spec.json"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  CHECK(read_csv(dir / "X.csv") == d.X);
  CHECK(read_csv(dir / "W_true.csv") == d.W_true);
  const std::string spec_json = read_text(dir / "spec.json");
  CHECK(spec_json.find("categorical") != std::string::npos);
  const std::string labels = read_text(dir / "labels.csv");
  CHECK(labels.find("1a1") != std::string::npos);
}
