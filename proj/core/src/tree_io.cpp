#include "phnmf/tree_io.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "phnmf/matrix_io.hpp"

namespace phnmf {

namespace {

using json = nlohmann::ordered_json;

json node_json(const TreeNode& node,
               const std::vector<std::string>& feature_names) {
  json j;
  j["node_id"] = node.node_id;
  j["depth"] = node.depth;
  j["rank"] = node.rank_used;
  j["similarity"] = std::isnan(node.similarity_score)
                        ? json(nullptr)
                        : json(node.similarity_score);
  j["leaf_reason"] = std::string(to_string(node.leaf_reason));
  j["n_members"] = node.members.size();
  j["members"] = node.members;
  j["residuals"] = node.residual_members;
  if (!node.rank_scores.empty()) {
    json scores = json::object();
    for (const auto& [k, s] : node.rank_scores) scores[std::to_string(k)] = s;
    j["rank_scores"] = std::move(scores);
  }
  if (node.parent_topic) {
    j["parent_topic"] = *node.parent_topic;
    json features = json::array();
    for (const auto& f : node.top_features) {
      json entry;
      entry["feature"] = f.feature;
      if (f.feature < feature_names.size()) {
        entry["name"] = feature_names[f.feature];
      }
      entry["weight"] = f.weight;
      features.push_back(std::move(entry));
    }
    j["top_features"] = std::move(features);
  }
  json children = json::array();
  for (const auto& c : node.children) {
    children.push_back(node_json(c, feature_names));
  }
  j["children"] = std::move(children);
  return j;
}

void dot_node(const TreeNode& node, std::ostringstream& out) {
  out << "  \"" << node.node_id << "\" [label=\"" << node.node_id << "\\nn="
      << node.members.size();
  if (!std::isnan(node.similarity_score)) {
    out << "\\nsim=" << format_double(std::round(node.similarity_score * 1e4) / 1e4);
  }
  if (!node.residual_members.empty()) {
    out << "\\nresidual=" << node.residual_members.size();
  }
  out << "\"];\n";
  for (const auto& c : node.children) {
    out << "  \"" << node.node_id << "\" -> \"" << c.node_id << "\";\n";
    dot_node(c, out);
  }
}

}  // namespace

std::string tree_json(const TreeNode& root,
                      const std::vector<std::string>& feature_names) {
  return node_json(root, feature_names).dump(2) + "\n";
}

std::string tree_dot(const TreeNode& root) {
  std::ostringstream out;
  out << "digraph phnmf {\n  node [shape=box];\n";
  dot_node(root, out);
  out << "}\n";
  return out.str();
}

std::string pgm_image(const Matrix& m) {
  std::string out = "P5 " + std::to_string(m.cols()) + " " +
                    std::to_string(m.rows()) + " 255\n";
  const double lo = m.min_value();
  const double hi = m.max_value();
  const double span = hi - lo;
  out.reserve(out.size() + m.size());
  for (double v : m.values()) {
    const double scaled = span > 0.0 ? (v - lo) / span * 255.0 : 0.0;
    out.push_back(static_cast<char>(
        static_cast<unsigned char>(std::lround(std::clamp(scaled, 0.0, 255.0)))));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Matrix& m) {
  write_text(path, pgm_image(m));
}

}  // namespace phnmf
