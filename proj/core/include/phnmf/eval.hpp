#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phnmf/hierarchy.hpp"
#include "phnmf/matrix.hpp"

namespace phnmf {

struct AccuracyReport {
  /// Correct rows / rows that landed in a leaf.
  double accuracy_assigned = 0.0;
  /// Correct rows / (leaf rows + residual rows); residuals count as errors.
  double accuracy_total = 0.0;
  /// Leaf id -> modal true label of its members.
  std::map<std::string, std::string> leaf_to_label;
  std::vector<std::string> leaf_ids;
  /// Sorted distinct labels; columns of `confusion`.
  std::vector<std::string> label_names;
  /// leaves x labels member counts.
  Matrix confusion;
  std::size_t n_assigned = 0;
  std::size_t n_correct = 0;
  std::size_t n_residual = 0;
  std::vector<std::string> warnings;
};

/// Names every leaf by the most frequent true label among its members
/// (ties to the lexicographically smallest label) and scores rows whose
/// leaf name equals their own label. Empty leaves are skipped with a
/// warning. Throws ValidationError if leaves overlap or an index has no
/// label.
AccuracyReport label_match_accuracy(std::span<const Leaf> leaves,
                                    std::span<const std::size_t> residuals,
                                    std::span<const std::string> true_labels);

struct RegressionFit {
  std::vector<double> coefficients;
  double intercept = 0.0;
  /// 0 for ordinary least squares.
  double lambda = 0.0;
  /// Cross-validated mean squared error per candidate lambda.
  std::map<double, double> cv_mse;
};

/// Least squares with an intercept. Throws ValidationError when the
/// centered design is rank deficient (smallest singular value at most
/// 1e-10 times the largest); use ridge() for such designs.
RegressionFit ols(const Matrix& x, std::span<const double> y);

struct RidgeOptions {
  /// Fit an unpenalized intercept by centering x and y.
  bool fit_intercept = true;
};

/// Minimizes ||y - X theta - b||^2 + lambda ||theta||^2.
RegressionFit ridge(const Matrix& x, std::span<const double> y, double lambda,
                    const RidgeOptions& options = {});

/// {1e-4, 1e-3, 1e-2, 1e-1, 1}.
std::vector<double> default_lambda_grid();

struct RidgeCvOptions {
  std::vector<double> grid = default_lambda_grid();
  std::size_t folds = 5;
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
};

/// Picks the lambda with the lowest mean held-out MSE over
/// repeats x folds (fold shuffle r seeded from (seed, r); ties go to the
/// smaller lambda), then refits on all rows.
RegressionFit ridge_cv(const Matrix& x, std::span<const double> y,
                       const RidgeCvOptions& options = {});

double mean_squared_error(const RegressionFit& fit, const Matrix& x,
                          std::span<const double> y);

struct AlignmentRow {
  std::string group;
  /// cos(theta_hat_group, theta_true); nullopt without ground truth.
  std::optional<double> subgroup_vs_truth;
  /// cos(theta_hat_group, theta_hat_population).
  double subgroup_vs_population = 0.0;
  /// cos(theta_hat_population, theta_true); nullopt without ground truth.
  std::optional<double> population_vs_truth;
  /// Some cosine involved a zero vector and was reported as 0.
  bool zero_vector = false;
};

/// Per-group cosine table over coefficient vectors (intercepts excluded).
/// `truth` maps group names to true coefficient vectors and may omit
/// groups.
std::vector<AlignmentRow> coeff_alignment(
    const std::map<std::string, RegressionFit>& sub_fits,
    const RegressionFit& population_fit,
    const std::map<std::string, std::vector<double>>& truth = {});

}  // namespace phnmf
