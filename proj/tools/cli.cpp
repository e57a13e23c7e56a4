#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "phnmf/csv.hpp"
#include "phnmf/error.hpp"
#include "phnmf/eval.hpp"
#include "phnmf/experiments.hpp"
#include "phnmf/hierarchy.hpp"
#include "phnmf/ingest.hpp"
#include "phnmf/linalg.hpp"
#include "phnmf/matrix_io.hpp"
#include "phnmf/model_select.hpp"
#include "phnmf/synthgen.hpp"
#include "phnmf/tree_io.hpp"

#ifndef PHNMF_VERSION
#define PHNMF_VERSION "0.0.0"
#endif

namespace phnmf::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Result of one command: the files it wrote (relative to the output
// directory), the resolved configuration and the master seed.
struct Outcome {
  std::vector<std::string> artifacts;
  json config = json::object();
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------- options

struct NmfOpts {
  std::size_t max_iters = NmfConfig{}.max_iters;
  double rel_tol = NmfConfig{}.rel_tol;
  double mu_epsilon = NmfConfig{}.mu_epsilon;

  void add(CLI::App* app) {
    app->add_option("--max-iters", max_iters, "NMF iteration cap")
        ->capture_default_str();
    app->add_option("--rel-tol", rel_tol,
                    "NMF relative objective change for convergence")
        ->capture_default_str();
    app->add_option("--mu-epsilon", mu_epsilon,
                    "Denominator guard of the multiplicative updates")
        ->capture_default_str();
  }
  NmfConfig config(std::uint64_t seed) const {
    NmfConfig c;
    c.max_iters = max_iters;
    c.rel_tol = rel_tol;
    c.mu_epsilon = mu_epsilon;
    c.seed = seed;
    return c;
  }
};

struct TreeOpts {
  double alpha = AlphaSpec{}.value;
  std::string alpha_mode = "relative";
  std::optional<double> beta;
  std::optional<std::size_t> min_docs;
  std::optional<std::size_t> rank;
  bool auto_rank = false;
  std::size_t k_min = 2;
  std::size_t k_max = 8;
  std::size_t seeds = HnmfConfig{}.n_seeds;
  std::size_t max_depth = HnmfConfig{}.max_depth;
  std::uint64_t seed = 0;
  NmfOpts nmf;
  // Rank policy used when neither --rank nor --auto-rank is given.
  bool default_auto = true;

  void add(CLI::App* app, bool population) {
    app->add_option("--alpha", alpha,
                    "Assignment threshold (fraction of the column max when "
                    "--alpha-mode is relative)")
        ->capture_default_str();
    app->add_option("--alpha-mode", alpha_mode, "relative or absolute")
        ->check(CLI::IsMember({"relative", "absolute"}))
        ->capture_default_str();
    if (population) {
      app->add_option("--beta", beta,
                      "Split while feature similarity exceeds beta "
                      "(default 0.8)");
    } else {
      app->add_option("--min-docs", min_docs,
                      "Do not split nodes with fewer members")
          ->required();
    }
    auto* r = app->add_option("--rank", rank, "Fixed rank per node");
    auto* a = app->add_flag("--auto-rank", auto_rank,
                            "Choose the rank per node by feature similarity");
    r->excludes(a);
    app->add_option("--k-min", k_min, "Smallest auto rank")
        ->capture_default_str();
    app->add_option("--k-max", k_max, "Largest auto rank")
        ->capture_default_str();
    app->add_option("--seeds", seeds, "NMF runs per similarity evaluation")
        ->capture_default_str();
    app->add_option("--max-depth", max_depth, "Depth cap")
        ->capture_default_str();
    app->add_option("--seed", seed, "Master seed")->capture_default_str();
    nmf.add(app);
  }

  HnmfConfig config(bool population) const {
    HnmfConfig c = population ? HnmfConfig::phnmf_defaults()
                              : HnmfConfig::hnmf_defaults(min_docs.value_or(1));
    if (population && beta) c.beta = *beta;
    c.alpha.value = alpha;
    c.alpha.mode =
        alpha_mode == "absolute" ? AlphaMode::absolute : AlphaMode::relative;
    if (rank) {
      c.rank = RankPolicy::fixed(*rank);
    } else if (auto_rank || default_auto) {
      c.rank = RankPolicy::auto_range(k_min, k_max);
    } else {
      c.rank = RankPolicy::fixed(2);
    }
    c.n_seeds = seeds;
    c.max_depth = max_depth;
    c.nmf = nmf.config(seed);
    return c;
  }
};

json nmf_json(const NmfConfig& c) {
  json j;
  j["rank"] = c.rank;
  j["max_iters"] = c.max_iters;
  j["rel_tol"] = c.rel_tol;
  j["mu_epsilon"] = c.mu_epsilon;
  j["seed"] = c.seed;
  return j;
}

json tree_config_json(const HnmfConfig& c) {
  json j;
  j["alpha"] = c.alpha.value;
  j["alpha_mode"] =
      c.alpha.mode == AlphaMode::relative ? "relative" : "absolute";
  if (c.beta) j["beta"] = *c.beta;
  if (c.min_docs) j["min_docs"] = *c.min_docs;
  j["max_depth"] = c.max_depth;
  if (c.rank.automatic) {
    j["rank"] = "auto";
    j["k_min"] = c.rank.k_min;
    j["k_max"] = c.rank.k_max;
  } else {
    j["rank"] = c.rank.fixed_rank;
  }
  j["n_seeds"] = c.n_seeds;
  j["nmf"] = nmf_json(c.nmf);
  j["nmf"].erase("rank");
  return j;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string fixed(double v) {
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

// ---------------------------------------------------------------- commands

Outcome cmd_synth(const std::string& kind_name, std::uint64_t seed,
                  bool shuffle, const fs::path& out_dir, std::ostream& out) {
  const DatasetKind kind = parse_dataset_kind(kind_name);
  SyntheticSpec spec = kind == DatasetKind::continuous
                           ? SyntheticSpec::continuous(seed)
                           : SyntheticSpec::categorical(seed);
  spec.shuffle_columns = shuffle;
  const SyntheticDataset data = generate(spec);
  export_dataset(out_dir, data);
  out << "wrote " << data.X.rows() << "x" << data.X.cols() << " "
      << kind_name << " dataset to " << out_dir.string() << "\n";
  Outcome o;
  o.artifacts = {"X.csv",     "labels.csv", "W_true.csv", "H_true.csv",
                 "thetas.csv", "y.csv",     "spec.json"};
  o.config["kind"] = kind_name;
  o.config["shuffle_columns"] = shuffle;
  o.seed = seed;
  return o;
}

void write_membership(const fs::path& path, const TreeNode& root,
                      bool with_residuals) {
  std::ostringstream s;
  s << "row,node_id,role\n";
  for (const auto& leaf : leaves(root)) {
    for (std::size_t r : leaf.members) {
      s << r << ',' << leaf.node_id << ",leaf\n";
    }
  }
  if (with_residuals) {
    for (const auto& res : residual_sets(root)) {
      for (std::size_t r : res.members) {
        s << r << ',' << res.node_id << ",residual\n";
      }
    }
  }
  write_text(path, s.str());
}

Outcome cmd_phnmf(const fs::path& input, const std::string& names_path,
                  const TreeOpts& opts, const fs::path& out_dir,
                  std::ostream& out) {
  const Matrix x = load_matrix(input);
  std::vector<std::string> names;
  if (!names_path.empty()) names = read_lines(names_path);
  if (!names.empty() && names.size() != x.cols()) {
    throw ValidationError("feature names file has " +
                          std::to_string(names.size()) + " lines, X has " +
                          std::to_string(x.cols()) + " columns");
  }
  const HnmfConfig cfg = opts.config(true);
  const PopulationTree tree = population_hnmf(x, cfg);

  write_text(out_dir / "tree.json", tree_json(tree.root, names));
  write_text(out_dir / "tree.dot", tree_dot(tree.root));
  const Matrix sorted = select_rows(x, depth_first_row_order(tree.root));
  write_csv(out_dir / "sorted.csv", sorted);
  write_pgm(out_dir / "sorted.pgm", sorted);
  write_membership(out_dir / "leaves.csv", tree.root, true);

  const auto leaf_sets = leaves(tree);
  out << "leaves: " << leaf_sets.size()
      << "  depth: " << tree_depth(tree.root)
      << "  residuals: " << all_residuals(tree.root).size() << "\n";

  Outcome o;
  o.artifacts = {"tree.json", "tree.dot", "sorted.csv", "sorted.pgm",
                 "leaves.csv"};
  o.config = tree_config_json(cfg);
  o.config["input"] = input.string();
  if (!names_path.empty()) o.config["feature_names"] = names_path;
  o.seed = opts.seed;
  return o;
}

Outcome cmd_hnmf(const fs::path& input, const std::string& names_path,
                 const TreeOpts& opts, const fs::path& out_dir,
                 std::ostream& out) {
  const Matrix x = load_matrix(input);
  std::vector<std::string> names;
  if (!names_path.empty()) names = read_lines(names_path);
  if (!names.empty() && names.size() != x.cols()) {
    throw ValidationError("feature names file does not match X columns");
  }
  const HnmfConfig cfg = opts.config(false);
  const TopicTree tree = hnmf_topdown(x, cfg);
  write_text(out_dir / "tree.json", tree_json(tree.root, names));
  write_text(out_dir / "tree.dot", tree_dot(tree.root));
  write_membership(out_dir / "leaves.csv", tree.root, true);
  out << "topics (leaves): " << leaves(tree.root).size()
      << "  depth: " << tree_depth(tree.root) << "\n";
  Outcome o;
  o.artifacts = {"tree.json", "tree.dot", "leaves.csv"};
  o.config = tree_config_json(cfg);
  o.config["input"] = input.string();
  o.seed = opts.seed;
  return o;
}

Outcome cmd_rank(const fs::path& input, std::size_t k_min, std::size_t k_max,
                 std::size_t seeds, const NmfOpts& nmf_opts,
                 std::uint64_t seed, const fs::path& out_dir,
                 std::ostream& out) {
  const Matrix x = load_matrix(input);
  const NmfConfig cfg = nmf_opts.config(seed);
  const RankSelection sel =
      select_rank(x, k_min, k_max, cfg, SimilarityOptions{seeds, false});
  write_text(out_dir / "rank.json", rank_selection_json(sel) + "\n");
  for (const auto& [k, score] : sel.candidate_scores) {
    out << "k=" << k << "  score=" << fixed(score) << "\n";
  }
  out << "chosen k=" << sel.chosen_k << "\n";
  Outcome o;
  o.artifacts = {"rank.json"};
  o.config["input"] = input.string();
  o.config["k_min"] = k_min;
  o.config["k_max"] = k_max;
  o.config["n_seeds"] = seeds;
  o.config["nmf"] = nmf_json(cfg);
  o.config["nmf"].erase("rank");
  o.seed = seed;
  return o;
}

Outcome cmd_accuracy(const std::string& kind_name, std::size_t replicates,
                     const TreeOpts& opts, const fs::path& out_dir,
                     std::ostream& out) {
  const DatasetKind kind = parse_dataset_kind(kind_name);
  const HnmfConfig cfg = opts.config(true);
  const AccuracySummary s =
      accuracy_experiment(kind, replicates, opts.seed, cfg);

  std::ostringstream csv;
  csv << "replicate,seed,n_leaves,depth,n_residual,accuracy_assigned,"
         "accuracy_total\n";
  for (const auto& r : s.replicates) {
    csv << r.replicate << ',' << r.seed << ',' << r.n_leaves << ','
        << r.depth << ',' << r.n_residual << ',' << fixed(r.accuracy_assigned)
        << ',' << fixed(r.accuracy_total) << '\n';
  }
  csv << "mean,,,,," << fixed(s.mean_assigned) << ',' << fixed(s.mean_total)
      << '\n';
  csv << "se,,,,," << fixed(s.se_assigned) << ',' << fixed(s.se_total)
      << '\n';
  write_text(out_dir / "accuracy.csv", csv.str());

  json summary;
  summary["kind"] = kind_name;
  summary["replicates"] = replicates;
  summary["mean_accuracy_assigned"] = s.mean_assigned;
  summary["se_accuracy_assigned"] = s.se_assigned;
  summary["mean_accuracy_total"] = s.mean_total;
  summary["se_accuracy_total"] = s.se_total;
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");

  out << std::fixed << std::setprecision(4) << kind_name
      << " accuracy (assigned): mean " << s.mean_assigned << "  se "
      << s.se_assigned << "  over " << replicates << " replicates\n";
  Outcome o;
  o.artifacts = {"accuracy.csv", "summary.json"};
  o.config = tree_config_json(cfg);
  o.config.erase("nmf");
  o.config["nmf"] = nmf_json(cfg.nmf);
  o.config["nmf"].erase("rank");
  o.config["nmf"].erase("seed");
  o.config["kind"] = kind_name;
  o.config["replicates"] = replicates;
  o.seed = opts.seed;
  return o;
}

Outcome cmd_regression(const std::string& kind_name, const TreeOpts& opts,
                       const fs::path& out_dir, std::ostream& out) {
  const DatasetKind kind = parse_dataset_kind(kind_name);
  const HnmfConfig cfg = opts.config(true);
  const RegressionExperiment ex = regression_experiment(kind, opts.seed, cfg);

  std::map<std::string, const GroupFit*> fits;
  for (const auto& g : ex.subgroup_fits) fits[g.group] = &g;

  std::ostringstream csv;
  csv << "group,n_rows,lambda,subgroup_vs_truth,subgroup_vs_population,"
         "population_vs_truth\n";
  for (const auto& row : ex.alignment) {
    const GroupFit* g = fits.at(row.group);
    csv << row.group << ',' << g->n_rows << ',' << fixed(g->fit.lambda) << ','
        << fixed(row.subgroup_vs_truth.value_or(NAN)) << ','
        << fixed(row.subgroup_vs_population) << ','
        << fixed(row.population_vs_truth.value_or(NAN)) << '\n';
  }
  write_text(out_dir / "alignment.csv", csv.str());

  std::ostringstream coef;
  coef << "fit,n_rows,lambda,intercept";
  for (std::size_t j = 0; j < ex.population_fit.coefficients.size(); ++j) {
    coef << ",theta" << j + 1;
  }
  coef << '\n';
  auto coef_row = [&](const std::string& name, std::size_t n,
                      const RegressionFit& f) {
    coef << name << ',' << n << ',' << fixed(f.lambda) << ','
         << fixed(f.intercept);
    for (double c : f.coefficients) coef << ',' << fixed(c);
    coef << '\n';
  };
  coef_row("population", ex.data.X.rows(), ex.population_fit);
  for (const auto& g : ex.subgroup_fits) coef_row(g.group, g.n_rows, g.fit);
  write_text(out_dir / "coefficients.csv", coef.str());
  write_text(out_dir / "tree.json", tree_json(ex.tree.root));

  const std::size_t wins = groups_beating_population(ex.alignment);
  out << std::fixed << std::setprecision(4);
  out << "group  sub~truth  sub~pop  pop~truth\n";
  for (const auto& row : ex.alignment) {
    out << std::left << std::setw(6) << row.group << std::right << ' '
        << std::setw(9) << row.subgroup_vs_truth.value_or(NAN) << ' '
        << std::setw(8) << row.subgroup_vs_population << ' ' << std::setw(9)
        << row.population_vs_truth.value_or(NAN) << '\n';
  }
  out << "subgroup fit closer to truth than population fit in " << wins
      << " of " << ex.alignment.size() << " groups\n";
  for (const auto& w : ex.warnings) out << "warning: " << w << "\n";

  Outcome o;
  o.artifacts = {"alignment.csv", "coefficients.csv", "tree.json"};
  o.config = tree_config_json(cfg);
  o.config["kind"] = kind_name;
  o.config["estimator"] = kind == DatasetKind::continuous ? "ols" : "ridge_cv";
  o.seed = opts.seed;
  return o;
}

Outcome cmd_ingest(const fs::path& csv_path, const fs::path& schema_path,
                   const NmfOpts& nmf_opts, std::optional<std::uint64_t> seed,
                   const fs::path& out_dir, std::ostream& out) {
  SurveySchema schema = SurveySchema::load(schema_path);
  if (seed) schema.seed = *seed;
  const RawTable table = load_csv(csv_path, schema);
  const EncodedSurvey enc =
      encode_survey(table, schema, nmf_opts.config(schema.seed));
  export_encoded(out_dir, enc);
  write_text(out_dir / "schema.json", schema.to_json() + "\n");
  out << "encoded " << enc.X.rows() << " respondents x " << enc.X.cols()
      << " features (" << enc.demographic_names.size()
      << " demographic columns kept aside)\n";
  for (const auto& w : enc.warnings) out << "warning: " << w << "\n";
  Outcome o;
  o.artifacts = {"X.csv", "feature_names.txt", "demographics.csv",
                 "schema.json"};
  o.config["csv"] = csv_path.string();
  o.config["schema"] = schema_path.string();
  o.config["nmf"] = nmf_json(nmf_opts.config(schema.seed));
  o.config["nmf"].erase("rank");
  o.seed = schema.seed;
  return o;
}

// ---------------------------------------------------------------- manifest

// Input paths are stored absolute so a manifest replays from any directory.
std::vector<std::string> absolute_inputs(std::vector<std::string> args) {
  static const std::vector<std::string> path_flags = {
      "--input", "--feature-names", "--csv", "--schema"};
  for (std::size_t i = 0; i < args.size(); ++i) {
    for (const auto& flag : path_flags) {
      if (args[i] == flag && i + 1 < args.size()) {
        args[i + 1] = fs::absolute(args[i + 1]).lexically_normal().string();
      } else if (args[i].rfind(flag + "=", 0) == 0) {
        args[i] = flag + "=" +
                  fs::absolute(args[i].substr(flag.size() + 1))
                      .lexically_normal()
                      .string();
      }
    }
  }
  return args;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::vector<std::string>& args, const Outcome& o,
                    double seconds) {
  json m;
  m["command"] = command;
  m["args"] = absolute_inputs(args);
  m["out"] = out_dir.string();
  m["config"] = o.config;
  m["seed"] = o.seed;
  m["artifacts"] = o.artifacts;
  m["wall_clock_seconds"] = seconds;
  m["version"] = PHNMF_VERSION;
  write_text(out_dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<std::string> replace_out(std::vector<std::string> args,
                                      const std::string& out_dir) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out" && i + 1 < args.size()) {
      args[i + 1] = out_dir;
      return args;
    }
    if (args[i].rfind("--out=", 0) == 0) {
      args[i] = "--out=" + out_dir;
      return args;
    }
  }
  args.push_back("--out");
  args.push_back(out_dir);
  return args;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  return std::equal(std::istreambuf_iterator<char>(fa),
                    std::istreambuf_iterator<char>(),
                    std::istreambuf_iterator<char>(fb),
                    std::istreambuf_iterator<char>());
}

int cmd_replay(const fs::path& manifest_path, const fs::path& out_dir,
               bool check, std::ostream& out, std::ostream& err) {
  json m;
  try {
    m = json::parse(read_text(manifest_path));
  } catch (const json::exception& e) {
    throw ValidationError("cannot parse manifest " + manifest_path.string() +
                          ": " + e.what());
  }
  if (!m.contains("args") || !m.contains("artifacts")) {
    throw ValidationError("manifest lacks args or artifacts");
  }
  const auto args =
      replace_out(m["args"].get<std::vector<std::string>>(), out_dir.string());
  const int code = run(args, out, err);
  if (code != kExitOk || !check) return code;

  const fs::path original = manifest_path.parent_path();
  std::size_t mismatches = 0;
  for (const auto& a : m["artifacts"]) {
    const std::string name = a.get<std::string>();
    const bool ok = same_bytes(original / name, out_dir / name);
    out << (ok ? "identical  " : "DIFFERENT  ") << name << "\n";
    if (!ok) ++mismatches;
  }
  if (mismatches) {
    err << mismatches << " artifact(s) differ from " << original.string()
        << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Population-based hierarchical NMF for survey data", "phnmf"};
  app.set_version_flag("--version", PHNMF_VERSION);
  app.require_subcommand(1);

  std::string out_dir;
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "Output directory")->required();
  };

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string synth_kind = "continuous";
  std::uint64_t synth_seed = 0;
  bool synth_shuffle = false;
  synth->add_option("--kind", synth_kind, "continuous or categorical")
      ->check(CLI::IsMember({"continuous", "categorical"}))
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "Master seed")->capture_default_str();
  synth->add_flag("--shuffle-columns", synth_shuffle,
                  "Permute feature columns");
  add_out(synth);

  // phnmf / hnmf
  std::string input, names_path;
  TreeOpts pop_opts, topic_opts;
  auto* ph = app.add_subcommand("phnmf", "Population-based hierarchical NMF");
  ph->add_option("--input", input, "X as CSV or .bin")->required();
  ph->add_option("--feature-names", names_path, "One feature name per line");
  pop_opts.add(ph, true);
  add_out(ph);

  auto* hn = app.add_subcommand("hnmf", "Top-down hierarchical NMF");
  hn->add_option("--input", input, "X as CSV or .bin")->required();
  hn->add_option("--feature-names", names_path, "One feature name per line");
  topic_opts.add(hn, false);
  add_out(hn);

  // rank
  auto* rk = app.add_subcommand("rank", "Feature-similarity rank selection");
  std::size_t rk_min = 2, rk_max = 8, rk_seeds = 10;
  std::uint64_t rk_seed = 0;
  NmfOpts rk_nmf;
  rk->add_option("--input", input, "X as CSV or .bin")->required();
  rk->add_option("--k-min", rk_min)->capture_default_str();
  rk->add_option("--k-max", rk_max)->capture_default_str();
  rk->add_option("--seeds", rk_seeds, "NMF runs per rank")
      ->capture_default_str();
  rk->add_option("--seed", rk_seed, "Master seed")->capture_default_str();
  rk_nmf.add(rk);
  add_out(rk);

  // accuracy / regression
  std::string exp_kind = "continuous";
  std::size_t replicates = 50;
  TreeOpts acc_opts, reg_opts;
  acc_opts.default_auto = false;
  reg_opts.default_auto = false;
  auto* acc = app.add_subcommand(
      "accuracy", "Clustering accuracy over synthetic replicates");
  acc->add_option("--kind", exp_kind)
      ->check(CLI::IsMember({"continuous", "categorical"}))
      ->capture_default_str();
  acc->add_option("--replicates", replicates)->capture_default_str();
  acc_opts.add(acc, true);
  add_out(acc);

  auto* reg = app.add_subcommand(
      "regression", "Subgroup vs population regression on a synthetic replicate");
  reg->add_option("--kind", exp_kind)
      ->check(CLI::IsMember({"continuous", "categorical"}))
      ->capture_default_str();
  reg_opts.add(reg, true);
  add_out(reg);

  // ingest
  auto* ing = app.add_subcommand("ingest", "Encode a survey CSV");
  std::string csv_path, schema_path;
  std::optional<std::uint64_t> ing_seed;
  NmfOpts ing_nmf;
  ing->add_option("--csv", csv_path, "Survey CSV with a header row")
      ->required();
  ing->add_option("--schema", schema_path, "Schema JSON")->required();
  ing->add_option("--seed", ing_seed, "Overrides the schema seed");
  ing_nmf.add(ing);
  add_out(ing);

  // replay
  auto* rp = app.add_subcommand("replay", "Rerun a command from its manifest");
  std::string manifest_path;
  bool check = false;
  rp->add_option("--manifest", manifest_path, "manifest.json")->required();
  rp->add_flag("--check", check,
               "Compare the new artifacts with the recorded ones");
  add_out(rp);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << PHNMF_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    Outcome outcome;
    std::string command;
    if (rp->parsed()) {
      return cmd_replay(manifest_path, out_dir, check, out, err);
    } else if (synth->parsed()) {
      command = "synth";
      outcome = cmd_synth(synth_kind, synth_seed, synth_shuffle, out_dir, out);
    } else if (ph->parsed()) {
      command = "phnmf";
      outcome = cmd_phnmf(input, names_path, pop_opts, out_dir, out);
    } else if (hn->parsed()) {
      command = "hnmf";
      outcome = cmd_hnmf(input, names_path, topic_opts, out_dir, out);
    } else if (rk->parsed()) {
      command = "rank";
      outcome = cmd_rank(input, rk_min, rk_max, rk_seeds, rk_nmf, rk_seed,
                         out_dir, out);
    } else if (acc->parsed()) {
      command = "accuracy";
      outcome = cmd_accuracy(exp_kind, replicates, acc_opts, out_dir, out);
    } else if (reg->parsed()) {
      command = "regression";
      outcome = cmd_regression(exp_kind, reg_opts, out_dir, out);
    } else if (ing->parsed()) {
      command = "ingest";
      outcome = cmd_ingest(csv_path, schema_path, ing_nmf, ing_seed, out_dir,
                           out);
    }
    const double seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    write_manifest(out_dir, command, args, outcome, seconds);
    return kExitOk;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ShapeError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace phnmf::cli
