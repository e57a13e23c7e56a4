#include "phnmf/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "phnmf/error.hpp"
#include "phnmf/linalg.hpp"
#include "phnmf/parallel.hpp"
#include "phnmf/rng.hpp"

namespace phnmf {

namespace {

// Separates the ridge fold shuffles from the tree seeds.
constexpr std::uint64_t kRidgeStream = 0x7269646765;  // "ridge"

void mean_and_se(const std::vector<double>& v, double& mean, double& se) {
  const auto n = static_cast<double>(v.size());
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  se = 0.0;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
}

SyntheticDataset make_dataset(DatasetKind kind, std::uint64_t seed) {
  return generate(kind == DatasetKind::continuous
                      ? SyntheticSpec::continuous(seed)
                      : SyntheticSpec::categorical(seed));
}

}  // namespace

HnmfConfig synthetic_experiment_config() {
  HnmfConfig c = HnmfConfig::phnmf_defaults();
  c.rank = RankPolicy::fixed(2);
  return c;
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t r) {
  return derive_seed(master, r);
}

AccuracyReplicate accuracy_replicate(DatasetKind kind, std::uint64_t seed,
                                     const HnmfConfig& config) {
  const SyntheticDataset data = make_dataset(kind, seed);
  HnmfConfig cfg = config;
  cfg.nmf.seed = seed;
  const PopulationTree tree = population_hnmf(data.X, cfg);
  const auto leaf_sets = leaves(tree);
  const auto residuals = all_residuals(tree.root);
  const AccuracyReport report =
      label_match_accuracy(leaf_sets, residuals, data.labels);

  AccuracyReplicate out;
  out.seed = seed;
  out.n_leaves = leaf_sets.size();
  out.depth = tree_depth(tree.root);
  out.n_residual = residuals.size();
  out.accuracy_assigned = report.accuracy_assigned;
  out.accuracy_total = report.accuracy_total;
  return out;
}

AccuracySummary accuracy_experiment(DatasetKind kind, std::size_t replicates,
                                    std::uint64_t master_seed,
                                    const HnmfConfig& config) {
  if (replicates == 0) throw ValidationError("replicates must be at least 1");
  AccuracySummary s;
  s.replicates.resize(replicates);
  parallel_for(replicates, [&](std::size_t r) {
    s.replicates[r] =
        accuracy_replicate(kind, replicate_seed(master_seed, r), config);
    s.replicates[r].replicate = r;
  });
  std::vector<double> assigned, total;
  for (const auto& r : s.replicates) {
    assigned.push_back(r.accuracy_assigned);
    total.push_back(r.accuracy_total);
  }
  mean_and_se(assigned, s.mean_assigned, s.se_assigned);
  mean_and_se(total, s.mean_total, s.se_total);
  return s;
}

RegressionExperiment regression_experiment(DatasetKind kind,
                                           std::uint64_t seed,
                                           const HnmfConfig& config) {
  RegressionExperiment ex;
  ex.data = make_dataset(kind, seed);
  HnmfConfig cfg = config;
  cfg.nmf.seed = seed;
  ex.tree = population_hnmf(ex.data.X, cfg);
  const auto leaf_sets = leaves(ex.tree);
  ex.accuracy = label_match_accuracy(leaf_sets, all_residuals(ex.tree.root),
                                     ex.data.labels);

  std::map<std::string, std::vector<std::size_t>> pooled;
  for (const auto& leaf : leaf_sets) {
    const auto it = ex.accuracy.leaf_to_label.find(leaf.node_id);
    if (it == ex.accuracy.leaf_to_label.end()) continue;
    auto& rows = pooled[it->second];
    rows.insert(rows.end(), leaf.members.begin(), leaf.members.end());
  }

  const bool use_ridge = kind == DatasetKind::categorical;
  auto fit = [&](const Matrix& x, std::span<const double> y,
                 std::uint64_t cv_seed) {
    if (use_ridge) {
      RidgeCvOptions opt;
      opt.seed = cv_seed;
      return ridge_cv(x, y, opt);
    }
    return ols(x, y);
  };

  const std::uint64_t cv_master = derive_seed(seed, kRidgeStream);
  ex.population_fit = fit(ex.data.W_true, ex.data.y, cv_master);

  const auto& names = synthetic_group_labels();
  std::map<std::string, RegressionFit> sub_fits;
  std::map<std::string, std::vector<double>> truth;
  for (std::size_t g = 0; g < names.size(); ++g) {
    const auto row = ex.data.thetas.row(g);
    truth[names[g]] = {row.begin(), row.end()};
    const auto it = pooled.find(names[g]);
    if (it == pooled.end()) {
      ex.warnings.push_back("group " + names[g] + " owns no leaf");
      continue;
    }
    std::sort(it->second.begin(), it->second.end());
    // Too few rows for a fit with intercept or for 5-fold CV.
    if (it->second.size() < std::max<std::size_t>(ex.data.W_true.cols() + 2, 5)) {
      ex.warnings.push_back("group " + names[g] + " has only " +
                            std::to_string(it->second.size()) +
                            " rows; not fitted");
      continue;
    }
    const Matrix x = select_rows(ex.data.W_true, it->second);
    std::vector<double> y;
    y.reserve(it->second.size());
    for (std::size_t i : it->second) y.push_back(ex.data.y[i]);
    GroupFit gf;
    gf.group = names[g];
    gf.n_rows = it->second.size();
    try {
      gf.fit = fit(x, y, derive_seed(cv_master, g + 1));
    } catch (const ValidationError& e) {
      ex.warnings.push_back("group " + names[g] + ": " + e.what() +
                            "; using ridge_cv");
      RidgeCvOptions opt;
      opt.seed = derive_seed(cv_master, g + 1);
      gf.fit = ridge_cv(x, y, opt);
    }
    sub_fits[gf.group] = gf.fit;
    ex.subgroup_fits.push_back(std::move(gf));
  }
  ex.alignment = coeff_alignment(sub_fits, ex.population_fit, truth);
  return ex;
}

std::size_t groups_beating_population(const std::vector<AlignmentRow>& rows) {
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.subgroup_vs_truth && r.population_vs_truth &&
        *r.subgroup_vs_truth > *r.population_vs_truth) {
      ++n;
    }
  }
  return n;
}

}  // namespace phnmf
