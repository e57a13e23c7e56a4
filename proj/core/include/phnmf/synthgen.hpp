#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phnmf/matrix.hpp"
#include "phnmf/rng.hpp"

namespace phnmf {

enum class DatasetKind { continuous, categorical };

std::string_view to_string(DatasetKind kind);
/// Parses "continuous" or "categorical"; throws ValidationError otherwise.
DatasetKind parse_dataset_kind(std::string_view text);

/// Mean and variance of a normal distribution before zero-truncation.
struct NormalParams {
  double mean = 0.0;
  double variance = 1.0;
};

/// Three binary splits over four topics give eight groups, 1a1 ... 2b2.
inline constexpr std::size_t kSyntheticGroups = 8;
inline constexpr std::size_t kSyntheticTopics = 4;

/// Group labels in row order: 1a1, 1a2, 1b1, 1b2, 2a1, 2a2, 2b1, 2b2.
const std::array<std::string, kSyntheticGroups>& synthetic_group_labels();

struct SyntheticSpec {
  DatasetKind kind = DatasetKind::continuous;
  std::size_t n_per_group = 200;
  std::vector<std::size_t> topic_word_counts = {30, 30, 30, 30};
  /// split_params[s][b]: distribution of topic s+1 for branch b of split s
  /// (branch 0 = "1" / "a" / "1", branch 1 = "2" / "b" / "2").
  std::array<std::array<NormalParams, 2>, 3> split_params = {{
      {{{64.0, 9.0}, {3.0, 9.0}}},
      {{{45.0, 9.0}, {3.0, 9.0}}},
      {{{3.0, 9.0}, {50.0, 9.0}}},
  }};
  /// Topic 4, discussed by the whole population.
  NormalParams shared_params = {50.0, 9.0};
  std::size_t multinomial_trials = 100;
  /// Owner topic is this many times as likely as each other topic.
  double owner_odds = 4.0;
  double theta_low = 0.5;
  double theta_high = 2.0;
  bool shuffle_columns = false;
  std::uint64_t seed = 0;

  static SyntheticSpec continuous(std::uint64_t seed);
  static SyntheticSpec categorical(std::uint64_t seed);

  std::size_t n_rows() const { return n_per_group * kSyntheticGroups; }
  std::size_t n_cols() const;
  void validate() const;
};

struct SyntheticDataset {
  SyntheticSpec spec;
  Matrix X;
  /// Per-row leaf label ("1a1" ... "2b2").
  std::vector<std::string> labels;
  /// Per-row ancestors, e.g. {"1", "1a", "1a1"}.
  std::vector<std::vector<std::string>> hierarchy_path;
  /// Per-row group index into synthetic_group_labels().
  std::vector<std::size_t> group_index;
  Matrix W_true;  // n x 4
  Matrix H_true;  // 4 x m
  /// Topic owning each column of X.
  std::vector<std::size_t> column_topic;
  Matrix thetas;  // 8 x 4, row g is the coefficient vector of group g
  std::vector<double> y;
};

/// Draw from N(mu, sigma2) conditioned on a positive value, by rejection.
/// Throws ValidationError when sigma2 <= 0 or the acceptance probability
/// is below 1e-6.
double sample_trunc_normal(double mu, double sigma2, SeededRng& rng);

/// Closed-form mean of the zero-truncated normal.
double trunc_normal_mean(double mu, double sigma2);

struct WTrue {
  Matrix W;
  std::vector<std::size_t> group_index;
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> hierarchy_path;
};

/// Person-topic matrix: rows grouped by label, one zero-truncated normal
/// draw per entry from the row's split parameters.
WTrue gen_w_true(const SyntheticSpec& spec, SeededRng& rng);

/// Topic-word matrix: each word column is Multinomial(trials, p) / trials
/// with the owner topic `owner_odds` times as likely as each other topic.
/// Columns are contiguous by topic.
Matrix gen_h(std::span<const std::size_t> topic_word_counts,
             std::size_t trials, double owner_odds, SeededRng& rng);

/// y_i = <w_i, theta_{g(i)}>.
std::vector<double> gen_response(const Matrix& w_true, const Matrix& thetas,
                                 std::span<const std::size_t> group_index);

/// X = W_true H_true with four equal topics.
SyntheticDataset gen_continuous(const SyntheticSpec& spec);

/// X = 1[(W_true H) > median of its topic block]. Shares W_true, labels,
/// thetas and y with gen_continuous for the same seed.
SyntheticDataset gen_categorical(const SyntheticSpec& spec);

/// Dispatches on spec.kind.
SyntheticDataset generate(const SyntheticSpec& spec);

/// Writes X.csv, labels.csv, W_true.csv, H_true.csv, thetas.csv, y.csv and
/// spec.json into `dir`.
void export_dataset(const std::filesystem::path& dir,
                    const SyntheticDataset& data);

}  // namespace phnmf
