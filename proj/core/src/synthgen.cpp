#include "phnmf/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "phnmf/error.hpp"
#include "phnmf/linalg.hpp"
#include "phnmf/matrix_io.hpp"

namespace phnmf {

namespace {

// Independent streams for each generated component. W_true and thetas use
// the same streams for both kinds, which makes same-seed datasets paired.
enum Stream : std::uint64_t {
  kStreamW = 1,
  kStreamHContinuous = 2,
  kStreamHCategorical = 3,
  kStreamTheta = 4,
  kStreamColumns = 5,
};

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

std::vector<std::size_t> topic_of_columns(
    std::span<const std::size_t> counts) {
  std::vector<std::size_t> topic;
  for (std::size_t t = 0; t < counts.size(); ++t)
    topic.insert(topic.end(), counts[t], t);
  return topic;
}

Matrix gen_thetas(const SyntheticSpec& spec) {
  SeededRng rng(spec.seed, kStreamTheta);
  Matrix thetas(kSyntheticGroups, kSyntheticTopics);
  for (double& v : thetas.values()) {
    v = rng.uniform(spec.theta_low, spec.theta_high);
  }
  return thetas;
}

// Applies a seeded column permutation to H when requested.
void maybe_shuffle(const SyntheticSpec& spec, Matrix& h,
                   std::vector<std::size_t>& column_topic) {
  if (!spec.shuffle_columns) return;
  std::vector<std::size_t> perm(h.cols());
  std::iota(perm.begin(), perm.end(), 0);
  SeededRng rng(spec.seed, kStreamColumns);
  rng.shuffle(std::span<std::size_t>(perm));
  Matrix shuffled(h.rows(), h.cols());
  std::vector<std::size_t> topic(h.cols());
  for (std::size_t j = 0; j < h.cols(); ++j) {
    for (std::size_t i = 0; i < h.rows(); ++i) shuffled(i, j) = h(i, perm[j]);
    topic[j] = column_topic[perm[j]];
  }
  h = std::move(shuffled);
  column_topic = std::move(topic);
}

SyntheticDataset assemble(const SyntheticSpec& spec, WTrue w, Matrix h,
                          std::vector<std::size_t> column_topic) {
  SyntheticDataset d;
  d.spec = spec;
  d.W_true = std::move(w.W);
  d.labels = std::move(w.labels);
  d.hierarchy_path = std::move(w.hierarchy_path);
  d.group_index = std::move(w.group_index);
  d.H_true = std::move(h);
  d.column_topic = std::move(column_topic);
  d.thetas = gen_thetas(spec);
  d.y = gen_response(d.W_true, d.thetas, d.group_index);
  return d;
}

}  // namespace

std::string_view to_string(DatasetKind kind) {
  return kind == DatasetKind::continuous ? "continuous" : "categorical";
}

DatasetKind parse_dataset_kind(std::string_view text) {
  if (text == "continuous") return DatasetKind::continuous;
  if (text == "categorical") return DatasetKind::categorical;
  throw ValidationError("unknown dataset kind '" + std::string(text) +
                        "' (expected continuous or categorical)");
}

const std::array<std::string, kSyntheticGroups>& synthetic_group_labels() {
  static const std::array<std::string, kSyntheticGroups> labels = {
      "1a1", "1a2", "1b1", "1b2", "2a1", "2a2", "2b1", "2b2"};
  return labels;
}

SyntheticSpec SyntheticSpec::continuous(std::uint64_t seed) {
  SyntheticSpec s;
  s.kind = DatasetKind::continuous;
  s.seed = seed;
  return s;
}

SyntheticSpec SyntheticSpec::categorical(std::uint64_t seed) {
  SyntheticSpec s;
  s.kind = DatasetKind::categorical;
  s.topic_word_counts = {65, 30, 20, 5};
  s.seed = seed;
  return s;
}

std::size_t SyntheticSpec::n_cols() const {
  return std::accumulate(topic_word_counts.begin(), topic_word_counts.end(),
                         std::size_t{0});
}

void SyntheticSpec::validate() const {
  if (n_per_group == 0) throw ValidationError("n_per_group must be positive");
  if (topic_word_counts.size() != kSyntheticTopics) {
    throw ValidationError("topic_word_counts must list 4 topics");
  }
  for (auto c : topic_word_counts) {
    if (c == 0) throw ValidationError("every topic needs at least one word");
  }
  if (multinomial_trials == 0) {
    throw ValidationError("multinomial_trials must be positive");
  }
  if (!(owner_odds > 0.0)) throw ValidationError("owner_odds must be positive");
  auto check = [](const NormalParams& p) {
    if (!(p.variance > 0.0) || p.mean < 0.0) {
      throw ValidationError(
          "split parameters need variance > 0 and mean >= 0");
    }
  };
  for (const auto& split : split_params)
    for (const auto& p : split) check(p);
  check(shared_params);
  if (!(theta_low <= theta_high)) {
    throw ValidationError("theta_low must not exceed theta_high");
  }
}

double trunc_normal_mean(double mu, double sigma2) {
  const double sigma = std::sqrt(sigma2);
  const double a = -mu / sigma;
  return mu + sigma * normal_pdf(a) / normal_cdf(-a);
}

double sample_trunc_normal(double mu, double sigma2, SeededRng& rng) {
  if (!(sigma2 > 0.0)) {
    throw ValidationError("sample_trunc_normal: variance must be positive");
  }
  const double sigma = std::sqrt(sigma2);
  if (normal_cdf(mu / sigma) < 1e-6) {
    throw ValidationError(
        "sample_trunc_normal: acceptance probability below 1e-6 for mean " +
        format_double(mu) + ", variance " + format_double(sigma2));
  }
  while (true) {
    const double v = rng.normal(mu, sigma);
    if (v > 0.0) return v;
  }
}

WTrue gen_w_true(const SyntheticSpec& spec, SeededRng& rng) {
  const auto& names = synthetic_group_labels();
  const std::size_t n = spec.n_rows();
  WTrue out;
  out.W = Matrix(n, kSyntheticTopics);
  out.group_index.resize(n);
  out.labels.resize(n);
  out.hierarchy_path.resize(n);
  for (std::size_t g = 0; g < kSyntheticGroups; ++g) {
    const std::array<std::size_t, 3> branch = {g / 4, (g / 2) % 2, g % 2};
    const std::string& label = names[g];
    for (std::size_t r = 0; r < spec.n_per_group; ++r) {
      const std::size_t i = g * spec.n_per_group + r;
      for (std::size_t s = 0; s < 3; ++s) {
        const auto& p = spec.split_params[s][branch[s]];
        out.W(i, s) = sample_trunc_normal(p.mean, p.variance, rng);
      }
      out.W(i, 3) = sample_trunc_normal(spec.shared_params.mean,
                                        spec.shared_params.variance, rng);
      out.group_index[i] = g;
      out.labels[i] = label;
      out.hierarchy_path[i] = {label.substr(0, 1), label.substr(0, 2), label};
    }
  }
  return out;
}

Matrix gen_h(std::span<const std::size_t> topic_word_counts,
             std::size_t trials, double owner_odds, SeededRng& rng) {
  const std::size_t k = topic_word_counts.size();
  const std::size_t m = std::accumulate(topic_word_counts.begin(),
                                        topic_word_counts.end(),
                                        std::size_t{0});
  const double owner_p = owner_odds / (owner_odds + double(k - 1));
  const double other_p = 1.0 / (owner_odds + double(k - 1));
  Matrix h(k, m);
  std::size_t col = 0;
  for (std::size_t t = 0; t < k; ++t) {
    for (std::size_t w = 0; w < topic_word_counts[t]; ++w, ++col) {
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t trial = 0; trial < trials; ++trial) {
        double u = rng.uniform();
        std::size_t pick = k - 1;
        for (std::size_t c = 0; c < k; ++c) {
          const double p = (c == t) ? owner_p : other_p;
          if (u < p) {
            pick = c;
            break;
          }
          u -= p;
        }
        ++counts[pick];
      }
      for (std::size_t c = 0; c < k; ++c) {
        h(c, col) = double(counts[c]) / double(trials);
      }
    }
  }
  return h;
}

std::vector<double> gen_response(const Matrix& w_true, const Matrix& thetas,
                                 std::span<const std::size_t> group_index) {
  if (group_index.size() != w_true.rows()) {
    throw ShapeError("gen_response: one group index per row required");
  }
  if (thetas.cols() != w_true.cols()) {
    throw ShapeError("gen_response: theta length must equal W columns");
  }
  std::vector<double> y(w_true.rows());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (group_index[i] >= thetas.rows()) {
      throw ShapeError("gen_response: group index out of range");
    }
    y[i] = dot(w_true.row(i), thetas.row(group_index[i]));
  }
  return y;
}

SyntheticDataset gen_continuous(const SyntheticSpec& spec) {
  spec.validate();
  SeededRng w_rng(spec.seed, kStreamW);
  WTrue w = gen_w_true(spec, w_rng);
  SeededRng h_rng(spec.seed, kStreamHContinuous);
  Matrix h = gen_h(spec.topic_word_counts, spec.multinomial_trials,
                   spec.owner_odds, h_rng);
  auto column_topic = topic_of_columns(spec.topic_word_counts);
  maybe_shuffle(spec, h, column_topic);

  SyntheticSpec tagged = spec;
  tagged.kind = DatasetKind::continuous;
  SyntheticDataset d =
      assemble(tagged, std::move(w), std::move(h), std::move(column_topic));
  d.X = matmul(d.W_true, d.H_true);
  return d;
}

SyntheticDataset gen_categorical(const SyntheticSpec& spec) {
  spec.validate();
  SeededRng w_rng(spec.seed, kStreamW);
  WTrue w = gen_w_true(spec, w_rng);
  SeededRng h_rng(spec.seed, kStreamHCategorical);
  Matrix h = gen_h(spec.topic_word_counts, spec.multinomial_trials,
                   spec.owner_odds, h_rng);
  auto column_topic = topic_of_columns(spec.topic_word_counts);
  maybe_shuffle(spec, h, column_topic);

  SyntheticSpec tagged = spec;
  tagged.kind = DatasetKind::categorical;
  SyntheticDataset d =
      assemble(tagged, std::move(w), std::move(h), std::move(column_topic));

  const Matrix product = matmul(d.W_true, d.H_true);
  std::vector<double> median(kSyntheticTopics, 0.0);
  for (std::size_t t = 0; t < kSyntheticTopics; ++t) {
    std::vector<double> block;
    for (std::size_t i = 0; i < product.rows(); ++i)
      for (std::size_t j = 0; j < product.cols(); ++j)
        if (d.column_topic[j] == t) block.push_back(product(i, j));
    const std::size_t mid = block.size() / 2;
    std::nth_element(block.begin(), block.begin() + mid, block.end());
    const double upper = block[mid];
    if (block.size() % 2 == 1) {
      median[t] = upper;
    } else {
      const double lower = *std::max_element(block.begin(), block.begin() + mid);
      median[t] = 0.5 * (lower + upper);
    }
  }
  d.X = Matrix(product.rows(), product.cols());
  for (std::size_t i = 0; i < product.rows(); ++i)
    for (std::size_t j = 0; j < product.cols(); ++j)
      d.X(i, j) = product(i, j) > median[d.column_topic[j]] ? 1.0 : 0.0;
  return d;
}

SyntheticDataset generate(const SyntheticSpec& spec) {
  return spec.kind == DatasetKind::continuous ? gen_continuous(spec)
                                              : gen_categorical(spec);
}

void export_dataset(const std::filesystem::path& dir,
                    const SyntheticDataset& data) {
  write_csv(dir / "X.csv", data.X);
  write_csv(dir / "W_true.csv", data.W_true);
  write_csv(dir / "H_true.csv", data.H_true);
  write_csv(dir / "thetas.csv", data.thetas);
  write_vector_csv(dir / "y.csv", data.y);

  std::string labels;
  for (const auto& l : data.labels) labels += l + "\n";
  write_text(dir / "labels.csv", labels);

  const SyntheticSpec& s = data.spec;
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(s.kind));
  j["seed"] = s.seed;
  j["n_per_group"] = s.n_per_group;
  j["n_rows"] = data.X.rows();
  j["n_cols"] = data.X.cols();
  j["topic_word_counts"] = s.topic_word_counts;
  auto splits = nlohmann::ordered_json::array();
  for (const auto& split : s.split_params) {
    auto pair = nlohmann::ordered_json::array();
    for (const auto& p : split)
      pair.push_back({{"mean", p.mean}, {"variance", p.variance}});
    splits.push_back(std::move(pair));
  }
  j["split_params"] = std::move(splits);
  j["shared_params"] = {{"mean", s.shared_params.mean},
                        {"variance", s.shared_params.variance}};
  j["multinomial_trials"] = s.multinomial_trials;
  j["owner_odds"] = s.owner_odds;
  j["theta_range"] = {s.theta_low, s.theta_high};
  j["shuffle_columns"] = s.shuffle_columns;
  j["group_labels"] = synthetic_group_labels();
  j["column_topic"] = data.column_topic;
  write_text(dir / "spec.json", j.dump(2) + "\n");
}

}  // namespace phnmf
