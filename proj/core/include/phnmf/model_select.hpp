#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "phnmf/matrix.hpp"
#include "phnmf/nmf.hpp"

namespace phnmf {

/// Largest rank for which row matching is supported.
inline constexpr std::size_t kMaxMatchRank = 9;

/// Optimal one-to-one assignment maximizing total weight on a square
/// matrix (Hungarian algorithm, O(k^3)). Returns assignment[i] = column
/// matched to row i.
std::vector<std::size_t> max_weight_assignment(const Matrix& weights);

struct RowMatch {
  /// assignment[i] is the row of H_b matched to row i of H_a.
  std::vector<std::size_t> assignment;
  double min_matched_cosine = 0.0;
  double total_cosine = 0.0;
  /// A zero row was involved in some cosine (treated as similarity 0).
  bool zero_row = false;
};

/// Pairs the rows of two k x m factor matrices so that the summed cosine
/// similarity is maximal, and reports the weakest matched pair.
RowMatch match_rows(const Matrix& h_a, const Matrix& h_b);

struct SimilarityReport {
  std::size_t rank = 0;
  std::size_t n_seeds = 0;
  std::vector<std::uint64_t> seeds;
  /// n_seeds x n_seeds; entry (a, b) is the least matched-row cosine
  /// between runs a and b. Symmetric with a unit diagonal.
  Matrix per_pair_min;
  /// Minimum of per_pair_min over all unordered pairs.
  double score = 0.0;
  bool zero_row = false;
};

struct SimilarityOptions {
  std::size_t n_seeds = 10;
  /// Every run uses config.seed itself instead of a derived seed. Only
  /// useful for testing the aggregation.
  bool reuse_seed = false;
};

/// Stability of rank-k NMF on X: runs NMF from n_seeds initializations
/// (seed r derived from config.seed and r), matches H rows between every
/// pair of runs and returns the smallest matched cosine over all pairs.
/// config.rank is ignored in favour of `k`.
SimilarityReport feature_similarity(const Matrix& x, std::size_t k,
                                    const NmfConfig& config,
                                    const SimilarityOptions& options = {});

struct RankSelection {
  std::map<std::size_t, double> candidate_scores;
  std::size_t chosen_k = 0;
  double chosen_score = 0.0;
  std::vector<SimilarityReport> reports;
};

/// Scores every k in [k_min, k_max] with feature_similarity and picks the
/// highest score, breaking ties toward the smaller k.
RankSelection select_rank(const Matrix& x, std::size_t k_min,
                          std::size_t k_max, const NmfConfig& config,
                          const SimilarityOptions& options = {});

std::string similarity_report_json(const SimilarityReport& report);
std::string rank_selection_json(const RankSelection& selection);

}  // namespace phnmf
