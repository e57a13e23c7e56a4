#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phnmf/matrix.hpp"
#include "phnmf/nmf.hpp"

namespace phnmf {

/// How the assignment threshold is interpreted at each node.
enum class AlphaMode {
  /// threshold_j = value * max_l W_{l,j}, per column of the node's W.
  relative,
  /// threshold_j = value for every column.
  absolute,
};

struct AlphaSpec {
  AlphaMode mode = AlphaMode::relative;
  double value = 0.05;
};

/// Per-column thresholds for a node's W.
std::vector<double> column_thresholds(const Matrix& w, const AlphaSpec& alpha);

struct RankPolicy {
  /// Auto: choose k per node with select_rank over [k_min, k_max].
  bool automatic = true;
  std::size_t fixed_rank = 2;
  std::size_t k_min = 2;
  std::size_t k_max = 8;

  static RankPolicy fixed(std::size_t k) { return {false, k, 2, 8}; }
  static RankPolicy auto_range(std::size_t lo = 2, std::size_t hi = 8) {
    return {true, 2, lo, hi};
  }
};

struct HnmfConfig {
  AlphaSpec alpha;
  /// Top-down HNMF stopping rule: nodes with fewer members are not split.
  std::optional<std::size_t> min_docs;
  /// PHNMF stopping rule: a node splits only while its feature similarity
  /// exceeds beta.
  std::optional<double> beta;
  std::size_t max_depth = 6;
  RankPolicy rank;
  /// Per-run NMF settings; `nmf.seed` is the master seed of the tree.
  NmfConfig nmf;
  /// NMF restarts per feature-similarity evaluation.
  std::size_t n_seeds = 10;

  static HnmfConfig phnmf_defaults();
  static HnmfConfig hnmf_defaults(std::size_t min_docs);
};

enum class LeafReason {
  none,            // internal node
  low_similarity,  // feature similarity <= beta
  too_small,       // no feasible rank for the node's submatrix
  max_depth,
  min_docs,        // fewer members than min_docs
  no_split,        // factorization produced fewer than two groups
};

std::string_view to_string(LeafReason reason);

struct FeatureWeight {
  std::size_t feature = 0;
  double weight = 0.0;
};

struct TreeNode {
  std::string node_id;
  std::size_t depth = 0;
  /// Row indices into the original X, ascending.
  std::vector<std::size_t> members;
  /// Members left at this node because no coefficient exceeded alpha.
  std::vector<std::size_t> residual_members;
  std::size_t rank_used = 0;
  Matrix W_local;
  Matrix H_local;
  /// NaN when similarity was not evaluated at this node.
  double similarity_score = std::numeric_limits<double>::quiet_NaN();
  /// Auto rank policy only: candidate k -> score.
  std::map<std::size_t, double> rank_scores;
  /// Index of the parent's topic that produced this node.
  std::optional<std::size_t> parent_topic;
  /// Top entries of that parent topic's H row, by descending weight.
  std::vector<FeatureWeight> top_features;
  LeafReason leaf_reason = LeafReason::none;
  std::vector<TreeNode> children;

  bool is_leaf() const noexcept { return children.empty(); }
};

/// Output of phnmf: children member sets are disjoint, and
/// union(children) + residual_members = members at every node.
struct PopulationTree {
  TreeNode root;
};

/// Output of hnmf_topdown: children member sets may overlap.
struct TopicTree {
  TreeNode root;
};

struct HardAssignment {
  /// Per row: the chosen group, or nullopt for a residual row.
  std::vector<std::optional<std::size_t>> group;
  std::vector<std::size_t> residuals;
};

/// Row l goes to j = argmax_f W_{l,f} (ties to the smallest f) when
/// W_{l,j} > alpha; otherwise it is a residual.
HardAssignment assign_hard(const Matrix& w, double alpha);
HardAssignment assign_hard(const Matrix& w, std::span<const double> thresholds);

/// Row l belongs to every j with W_{l,j} > alpha.
std::vector<std::vector<std::size_t>> assign_soft(const Matrix& w,
                                                  double alpha);
std::vector<std::vector<std::size_t>> assign_soft(
    const Matrix& w, std::span<const double> thresholds);

/// Top-down hierarchical NMF with overlapping topic membership. Requires
/// config.min_docs.
TopicTree hnmf_topdown(const Matrix& x, const HnmfConfig& config);

/// Population-based hierarchical NMF: hard splits, feature-similarity
/// stopping rule. Requires config.beta.
PopulationTree population_hnmf(const Matrix& x, const HnmfConfig& config);

struct Leaf {
  std::string node_id;
  std::vector<std::size_t> members;
};

/// Leaves in depth-first order.
std::vector<Leaf> leaves(const TreeNode& root);
std::vector<Leaf> leaves(const PopulationTree& tree);
/// Residual members of every node, tagged with the node that holds them.
std::vector<Leaf> residual_sets(const TreeNode& root);
/// All residual rows, ascending.
std::vector<std::size_t> all_residuals(const TreeNode& root);

/// Depth-first row order: each node lists its children's rows, then its
/// own residuals; a leaf lists its members.
std::vector<std::size_t> depth_first_row_order(const TreeNode& root);

std::size_t count_nodes(const TreeNode& root);
std::size_t tree_depth(const TreeNode& root);

}  // namespace phnmf
