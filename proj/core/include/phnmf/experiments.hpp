#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "phnmf/eval.hpp"
#include "phnmf/hierarchy.hpp"
#include "phnmf/synthgen.hpp"

namespace phnmf {

/// PHNMF settings used by the synthetic experiments: library defaults with
/// a fixed rank of 2 per level (the synthetic hierarchy is binary).
HnmfConfig synthetic_experiment_config();

struct AccuracyReplicate {
  std::size_t replicate = 0;
  /// Seed of both the dataset and the tree.
  std::uint64_t seed = 0;
  std::size_t n_leaves = 0;
  std::size_t depth = 0;
  std::size_t n_residual = 0;
  double accuracy_assigned = 0.0;
  double accuracy_total = 0.0;
};

struct AccuracySummary {
  std::vector<AccuracyReplicate> replicates;
  double mean_assigned = 0.0;
  /// Standard error of the mean; 0 for a single replicate.
  double se_assigned = 0.0;
  double mean_total = 0.0;
  double se_total = 0.0;
};

/// Seed of replicate r: derive_seed(master, r).
std::uint64_t replicate_seed(std::uint64_t master, std::size_t r);

AccuracyReplicate accuracy_replicate(DatasetKind kind, std::uint64_t seed,
                                     const HnmfConfig& config);

/// Replicates run concurrently; results are ordered by replicate index.
AccuracySummary accuracy_experiment(DatasetKind kind, std::size_t replicates,
                                    std::uint64_t master_seed,
                                    const HnmfConfig& config);

struct GroupFit {
  std::string group;
  std::size_t n_rows = 0;
  RegressionFit fit;
};

struct RegressionExperiment {
  SyntheticDataset data;
  PopulationTree tree;
  AccuracyReport accuracy;
  /// One fit per true group that owns at least one leaf, ordered by label.
  std::vector<GroupFit> subgroup_fits;
  RegressionFit population_fit;
  std::vector<AlignmentRow> alignment;
  std::vector<std::string> warnings;
};

/// Builds the tree, pools the leaves whose modal label is g into
/// subgroup g, regresses y on W_true within each subgroup and on all rows,
/// and compares coefficient directions. Continuous data uses least squares,
/// categorical data cross-validated ridge.
RegressionExperiment regression_experiment(DatasetKind kind,
                                           std::uint64_t seed,
                                           const HnmfConfig& config);

/// Groups whose subgroup fit is closer to the truth than the population
/// fit: cos(sub, truth) > cos(pop, truth).
std::size_t groups_beating_population(const std::vector<AlignmentRow>& rows);

}  // namespace phnmf
