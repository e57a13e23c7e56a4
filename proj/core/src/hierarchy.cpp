#include "phnmf/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phnmf/error.hpp"
#include "phnmf/linalg.hpp"
#include "phnmf/model_select.hpp"
#include "phnmf/parallel.hpp"
#include "phnmf/rng.hpp"

namespace phnmf {

namespace {

constexpr std::size_t kTopFeatures = 10;

std::string child_id(const std::string& parent, std::size_t topic) {
  const std::string index = std::to_string(topic + 1);
  return parent == "root" ? index : parent + "." + index;
}

std::uint64_t node_seed(std::uint64_t master, const std::string& node_id) {
  return derive_seed(master, hash_string(node_id));
}

std::vector<FeatureWeight> top_features(const Matrix& h, std::size_t topic) {
  std::vector<FeatureWeight> features(h.cols());
  for (std::size_t j = 0; j < h.cols(); ++j) features[j] = {j, h(topic, j)};
  const std::size_t keep = std::min(kTopFeatures, features.size());
  std::partial_sort(features.begin(), features.begin() + keep, features.end(),
                    [](const FeatureWeight& a, const FeatureWeight& b) {
                      return a.weight != b.weight ? a.weight > b.weight
                                                  : a.feature < b.feature;
                    });
  features.resize(keep);
  return features;
}

void check_thresholds(const Matrix& w, std::span<const double> thresholds) {
  if (thresholds.size() != w.cols()) {
    throw ShapeError("need one threshold per column of W");
  }
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const HnmfConfig& config, bool population)
      : x_(x), config_(config), population_(population) {}

  void build(TreeNode& node) const {
    if (!population_ && node.members.size() < *config_.min_docs) {
      node.leaf_reason = LeafReason::min_docs;
      return;
    }
    if (node.depth >= config_.max_depth) {
      node.leaf_reason = LeafReason::max_depth;
      return;
    }

    const Matrix sub = select_rows(x_, node.members);
    const std::size_t cap = std::min(sub.rows(), sub.cols());
    NmfConfig run = config_.nmf;
    run.seed = node_seed(config_.nmf.seed, node.node_id);
    const SimilarityOptions sim_options{config_.n_seeds, false};

    if (config_.rank.automatic) {
      const std::size_t hi = std::min(config_.rank.k_max, cap);
      if (hi < config_.rank.k_min) {
        node.leaf_reason = LeafReason::too_small;
        return;
      }
      const RankSelection sel =
          select_rank(sub, config_.rank.k_min, hi, run, sim_options);
      node.rank_used = sel.chosen_k;
      node.similarity_score = sel.chosen_score;
      node.rank_scores = sel.candidate_scores;
    } else {
      node.rank_used = config_.rank.fixed_rank;
      if (node.rank_used > cap || sub.rows() < 2) {
        node.rank_used = 0;
        node.leaf_reason = LeafReason::too_small;
        return;
      }
      if (population_) {
        node.similarity_score =
            feature_similarity(sub, node.rank_used, run, sim_options).score;
      }
    }

    if (population_ && !(node.similarity_score > *config_.beta)) {
      node.leaf_reason = LeafReason::low_similarity;
      return;
    }

    run.rank = node.rank_used;
    Factorization f = nmf(sub, run);
    const auto thresholds = column_thresholds(f.W, config_.alpha);

    std::vector<std::vector<std::size_t>> groups(node.rank_used);
    std::vector<std::size_t> residual_local;
    if (population_) {
      const HardAssignment a = assign_hard(f.W, thresholds);
      for (std::size_t l = 0; l < a.group.size(); ++l) {
        if (a.group[l]) groups[*a.group[l]].push_back(l);
      }
      residual_local = a.residuals;
    } else {
      const auto soft = assign_soft(f.W, thresholds);
      for (std::size_t l = 0; l < soft.size(); ++l) {
        for (std::size_t j : soft[l]) groups[j].push_back(l);
        if (soft[l].empty()) residual_local.push_back(l);
      }
    }

    node.W_local = std::move(f.W);
    node.H_local = std::move(f.H);

    const auto non_empty = static_cast<std::size_t>(
        std::count_if(groups.begin(), groups.end(),
                      [](const auto& g) { return !g.empty(); }));
    const bool any_progress = std::any_of(
        groups.begin(), groups.end(), [&](const auto& g) {
          return !g.empty() && g.size() < node.members.size();
        });
    if ((population_ && non_empty < 2) || (!population_ && !any_progress)) {
      node.leaf_reason = LeafReason::no_split;
      return;
    }

    for (std::size_t l : residual_local) {
      node.residual_members.push_back(node.members[l]);
    }
    for (std::size_t j = 0; j < groups.size(); ++j) {
      if (groups[j].empty()) continue;
      TreeNode child;
      child.node_id = child_id(node.node_id, j);
      child.depth = node.depth + 1;
      child.parent_topic = j;
      child.top_features = top_features(node.H_local, j);
      child.members.reserve(groups[j].size());
      for (std::size_t l : groups[j]) child.members.push_back(node.members[l]);
      node.children.push_back(std::move(child));
    }

    parallel_for(node.children.size(), [&](std::size_t c) {
      TreeNode& child = node.children[c];
      // Soft splits can reproduce the parent; recursing on it would only
      // repeat the same factorization.
      if (!population_ && child.members.size() == node.members.size()) {
        child.leaf_reason = LeafReason::no_split;
        return;
      }
      build(child);
    });
  }

 private:
  const Matrix& x_;
  const HnmfConfig& config_;
  bool population_;
};

void validate_input(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) {
    throw ValidationError("cannot build a tree from an empty matrix");
  }
  if (!x.all_finite()) throw ValidationError("X has non-finite entries");
  if (!x.all_nonnegative()) throw ValidationError("X has negative entries");
}

void validate_common(const HnmfConfig& config) {
  config.nmf.validate();
  if (config.max_depth == 0) {
    throw ValidationError("max_depth must be positive");
  }
  if (!(config.alpha.value >= 0.0)) {
    throw ValidationError("alpha must be non-negative");
  }
  if (config.rank.automatic) {
    if (config.rank.k_min < 2 || config.rank.k_min > config.rank.k_max ||
        config.rank.k_max > kMaxMatchRank - 1) {
      throw ValidationError("auto rank range must satisfy 2 <= k_min <= "
                            "k_max <= 8");
    }
  } else if (config.rank.fixed_rank == 0 ||
             config.rank.fixed_rank > kMaxMatchRank) {
    throw ValidationError("fixed rank must lie in [1, 9]");
  }
  if (config.n_seeds < 2) throw ValidationError("n_seeds must be at least 2");
}

TreeNode make_root(const Matrix& x) {
  TreeNode root;
  root.node_id = "root";
  root.members.resize(x.rows());
  std::iota(root.members.begin(), root.members.end(), std::size_t{0});
  return root;
}

void collect_leaves(const TreeNode& node, std::vector<Leaf>& out) {
  if (node.is_leaf()) {
    out.push_back({node.node_id, node.members});
    return;
  }
  for (const auto& c : node.children) collect_leaves(c, out);
}

void collect_residuals(const TreeNode& node, std::vector<Leaf>& out) {
  if (!node.residual_members.empty()) {
    out.push_back({node.node_id, node.residual_members});
  }
  for (const auto& c : node.children) collect_residuals(c, out);
}

void collect_order(const TreeNode& node, std::vector<std::size_t>& out) {
  if (node.is_leaf()) {
    out.insert(out.end(), node.members.begin(), node.members.end());
    return;
  }
  for (const auto& c : node.children) collect_order(c, out);
  out.insert(out.end(), node.residual_members.begin(),
             node.residual_members.end());
}

}  // namespace

std::vector<double> column_thresholds(const Matrix& w,
                                      const AlphaSpec& alpha) {
  std::vector<double> t(w.cols(), alpha.value);
  if (alpha.mode == AlphaMode::relative) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double mx = 0.0;
      for (std::size_t i = 0; i < w.rows(); ++i) mx = std::max(mx, w(i, j));
      t[j] = alpha.value * mx;
    }
  }
  return t;
}

HnmfConfig HnmfConfig::phnmf_defaults() {
  HnmfConfig c;
  c.beta = 0.8;
  return c;
}

HnmfConfig HnmfConfig::hnmf_defaults(std::size_t min_docs) {
  HnmfConfig c;
  c.min_docs = min_docs;
  return c;
}

std::string_view to_string(LeafReason reason) {
  switch (reason) {
    case LeafReason::none: return "none";
    case LeafReason::low_similarity: return "low_similarity";
    case LeafReason::too_small: return "too_small";
    case LeafReason::max_depth: return "max_depth";
    case LeafReason::min_docs: return "min_docs";
    case LeafReason::no_split: return "no_split";
  }
  return "unknown";
}

HardAssignment assign_hard(const Matrix& w,
                           std::span<const double> thresholds) {
  check_thresholds(w, thresholds);
  HardAssignment out;
  out.group.resize(w.rows());
  for (std::size_t l = 0; l < w.rows(); ++l) {
    const auto row = w.row(l);
    if (row.empty()) {
      out.residuals.push_back(l);
      continue;
    }
    const auto j = static_cast<std::size_t>(
        std::max_element(row.begin(), row.end()) - row.begin());
    if (row[j] > thresholds[j]) {
      out.group[l] = j;
    } else {
      out.residuals.push_back(l);
    }
  }
  return out;
}

HardAssignment assign_hard(const Matrix& w, double alpha) {
  const std::vector<double> t(w.cols(), alpha);
  return assign_hard(w, t);
}

std::vector<std::vector<std::size_t>> assign_soft(
    const Matrix& w, std::span<const double> thresholds) {
  check_thresholds(w, thresholds);
  std::vector<std::vector<std::size_t>> out(w.rows());
  for (std::size_t l = 0; l < w.rows(); ++l)
    for (std::size_t j = 0; j < w.cols(); ++j)
      if (w(l, j) > thresholds[j]) out[l].push_back(j);
  return out;
}

std::vector<std::vector<std::size_t>> assign_soft(const Matrix& w,
                                                  double alpha) {
  const std::vector<double> t(w.cols(), alpha);
  return assign_soft(w, t);
}

TopicTree hnmf_topdown(const Matrix& x, const HnmfConfig& config) {
  validate_input(x);
  validate_common(config);
  if (!config.min_docs || *config.min_docs == 0 || config.beta) {
    throw ValidationError(
        "hnmf_topdown needs a positive min_docs and no beta");
  }
  TopicTree tree{make_root(x)};
  TreeBuilder(x, config, false).build(tree.root);
  return tree;
}

PopulationTree population_hnmf(const Matrix& x, const HnmfConfig& config) {
  validate_input(x);
  validate_common(config);
  if (!config.beta || config.min_docs) {
    throw ValidationError("population_hnmf needs beta and no min_docs");
  }
  if (!(*config.beta >= 0.0 && *config.beta <= 1.0)) {
    throw ValidationError("beta must lie in [0, 1]");
  }
  PopulationTree tree{make_root(x)};
  TreeBuilder(x, config, true).build(tree.root);
  return tree;
}

std::vector<Leaf> leaves(const TreeNode& root) {
  std::vector<Leaf> out;
  collect_leaves(root, out);
  return out;
}

std::vector<Leaf> leaves(const PopulationTree& tree) {
  return leaves(tree.root);
}

std::vector<Leaf> residual_sets(const TreeNode& root) {
  std::vector<Leaf> out;
  collect_residuals(root, out);
  return out;
}

std::vector<std::size_t> all_residuals(const TreeNode& root) {
  std::vector<std::size_t> out;
  for (const auto& r : residual_sets(root)) {
    out.insert(out.end(), r.members.begin(), r.members.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> depth_first_row_order(const TreeNode& root) {
  std::vector<std::size_t> out;
  collect_order(root, out);
  return out;
}

std::size_t count_nodes(const TreeNode& root) {
  std::size_t n = 1;
  for (const auto& c : root.children) n += count_nodes(c);
  return n;
}

std::size_t tree_depth(const TreeNode& root) {
  std::size_t d = root.depth;
  for (const auto& c : root.children) d = std::max(d, tree_depth(c));
  return d;
}

}  // namespace phnmf
