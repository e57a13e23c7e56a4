#include "phnmf/model_select.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include <json.hpp>

#include "phnmf/error.hpp"
#include "phnmf/linalg.hpp"
#include "phnmf/parallel.hpp"

namespace phnmf {

std::vector<std::size_t> max_weight_assignment(const Matrix& weights) {
  const std::size_t n = weights.rows();
  if (weights.cols() != n) {
    throw ShapeError("max_weight_assignment: weight matrix must be square");
  }
  if (n == 0) return {};

  // Shortest augmenting path on cost = -weight, 1-based with a dummy
  // column 0.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weights(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

RowMatch match_rows(const Matrix& h_a, const Matrix& h_b) {
  if (h_a.rows() != h_b.rows() || h_a.cols() != h_b.cols()) {
    throw ShapeError("match_rows: factor shapes differ (" +
                     std::to_string(h_a.rows()) + "x" +
                     std::to_string(h_a.cols()) + " vs " +
                     std::to_string(h_b.rows()) + "x" +
                     std::to_string(h_b.cols()) + ")");
  }
  const std::size_t k = h_a.rows();
  if (k > kMaxMatchRank) {
    throw ShapeError("match_rows: rank " + std::to_string(k) +
                     " exceeds supported maximum " +
                     std::to_string(kMaxMatchRank));
  }

  RowMatch result;
  Matrix cos(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto c = cosine_similarity(h_a.row(i), h_b.row(j));
      cos(i, j) = c.value;
      result.zero_row = result.zero_row || c.zero_vector;
    }
  }
  result.assignment = max_weight_assignment(cos);
  result.min_matched_cosine = k ? 1.0 : 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double c = cos(i, result.assignment[i]);
    result.total_cosine += c;
    result.min_matched_cosine = std::min(result.min_matched_cosine, c);
  }
  return result;
}

SimilarityReport feature_similarity(const Matrix& x, std::size_t k,
                                    const NmfConfig& config,
                                    const SimilarityOptions& options) {
  if (options.n_seeds < 2) {
    throw ValidationError("feature_similarity: n_seeds must be at least 2");
  }
  if (k == 0 || k > std::min(x.rows(), x.cols())) {
    throw ShapeError("feature_similarity: rank " + std::to_string(k) +
                     " infeasible for " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + " matrix");
  }

  SimilarityReport report;
  report.rank = k;
  report.n_seeds = options.n_seeds;
  report.seeds.resize(options.n_seeds);
  for (std::size_t r = 0; r < options.n_seeds; ++r) {
    report.seeds[r] =
        options.reuse_seed ? config.seed : derive_seed(config.seed, r);
  }

  std::vector<Matrix> factors(options.n_seeds);
  parallel_for(options.n_seeds, [&](std::size_t r) {
    NmfConfig run = config;
    run.rank = k;
    run.seed = report.seeds[r];
    try {
      factors[r] = nmf(x, run).H;
    } catch (const Error& e) {
      throw ValidationError("feature_similarity: NMF run with seed " +
                            std::to_string(run.seed) + " failed: " + e.what());
    }
  });

  report.per_pair_min = Matrix::identity(options.n_seeds);
  report.score = 1.0;
  for (std::size_t a = 0; a < options.n_seeds; ++a) {
    for (std::size_t b = a + 1; b < options.n_seeds; ++b) {
      const RowMatch m = match_rows(factors[a], factors[b]);
      report.per_pair_min(a, b) = m.min_matched_cosine;
      report.per_pair_min(b, a) = m.min_matched_cosine;
      report.score = std::min(report.score, m.min_matched_cosine);
      report.zero_row = report.zero_row || m.zero_row;
    }
  }
  return report;
}

RankSelection select_rank(const Matrix& x, std::size_t k_min,
                          std::size_t k_max, const NmfConfig& config,
                          const SimilarityOptions& options) {
  if (k_min < 2 || k_min > k_max || k_max > kMaxMatchRank - 1) {
    throw ValidationError("select_rank: need 2 <= k_min <= k_max <= " +
                          std::to_string(kMaxMatchRank - 1));
  }
  if (k_max > std::min(x.rows(), x.cols())) {
    throw ShapeError("select_rank: " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) +
                     " matrix too small for rank " + std::to_string(k_max));
  }

  RankSelection sel;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    sel.reports.push_back(feature_similarity(x, k, config, options));
    const double score = sel.reports.back().score;
    sel.candidate_scores[k] = score;
    if (sel.chosen_k == 0 || score > sel.chosen_score) {
      sel.chosen_k = k;
      sel.chosen_score = score;
    }
  }
  return sel;
}

namespace {

nlohmann::ordered_json report_to_json(const SimilarityReport& r) {
  nlohmann::ordered_json j;
  j["rank"] = r.rank;
  j["n_seeds"] = r.n_seeds;
  j["seeds"] = r.seeds;
  auto pairs = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < r.n_seeds; ++a) {
    for (std::size_t b = a + 1; b < r.n_seeds; ++b) {
      pairs.push_back({{"a", a}, {"b", b}, {"min_cosine", r.per_pair_min(a, b)}});
    }
  }
  j["pairwise_min"] = std::move(pairs);
  j["score"] = r.score;
  j["zero_row_warning"] = r.zero_row;
  return j;
}

}  // namespace

std::string similarity_report_json(const SimilarityReport& report) {
  return report_to_json(report).dump(2);
}

std::string rank_selection_json(const RankSelection& selection) {
  nlohmann::ordered_json j;
  auto scores = nlohmann::ordered_json::object();
  for (const auto& [k, s] : selection.candidate_scores) {
    scores[std::to_string(k)] = s;
  }
  j["candidate_scores"] = std::move(scores);
  j["chosen_k"] = selection.chosen_k;
  j["chosen_score"] = selection.chosen_score;
  auto reports = nlohmann::ordered_json::array();
  for (const auto& r : selection.reports) reports.push_back(report_to_json(r));
  j["reports"] = std::move(reports);
  return j.dump(2);
}

}  // namespace phnmf
