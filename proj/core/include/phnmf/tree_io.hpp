#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "phnmf/hierarchy.hpp"
#include "phnmf/matrix.hpp"

namespace phnmf {

/// JSON tree: node_id, depth, rank, similarity (null when not evaluated),
/// leaf reason, members, residuals, top-10 parent-topic features and
/// children. Feature indices are named when `feature_names` is non-empty.
std::string tree_json(const TreeNode& root,
                      const std::vector<std::string>& feature_names = {});

/// Graphviz digraph with one box per node labelled by id, size and score.
std::string tree_dot(const TreeNode& root);

/// Binary 8-bit grayscale PGM ("P5 <cols> <rows> 255"), entries min-max
/// scaled to 0..255. A constant matrix maps to 0.
std::string pgm_image(const Matrix& m);
void write_pgm(const std::filesystem::path& path, const Matrix& m);

}  // namespace phnmf
