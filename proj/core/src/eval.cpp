#include "phnmf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eigen_map.hpp"
#include "phnmf/error.hpp"
#include "phnmf/linalg.hpp"
#include "phnmf/rng.hpp"

namespace phnmf {

namespace {

using detail::RowMatrix;
using detail::view;

void check_xy(const Matrix& x, std::span<const double> y) {
  if (x.rows() != y.size()) {
    throw ShapeError("regression: X has " + std::to_string(x.rows()) +
                     " rows but y has " + std::to_string(y.size()));
  }
  if (x.rows() == 0) throw ValidationError("regression: no observations");
}

struct Centered {
  RowMatrix x;
  Eigen::VectorXd y;
  Eigen::RowVectorXd x_mean;
  double y_mean = 0.0;
};

Centered center(const Matrix& x, std::span<const double> y, bool enabled) {
  Centered c;
  c.x = view(x);
  c.y = Eigen::Map<const Eigen::VectorXd>(y.data(),
                                          static_cast<Eigen::Index>(y.size()));
  c.x_mean = Eigen::RowVectorXd::Zero(c.x.cols());
  if (enabled) {
    c.x_mean = c.x.colwise().mean();
    c.y_mean = c.y.mean();
    c.x.rowwise() -= c.x_mean;
    c.y.array() -= c.y_mean;
  }
  return c;
}

RegressionFit finish(const Centered& c, const Eigen::VectorXd& theta,
                     double lambda) {
  RegressionFit fit;
  fit.coefficients.assign(theta.data(), theta.data() + theta.size());
  fit.intercept = c.y_mean - c.x_mean.dot(theta);
  fit.lambda = lambda;
  return fit;
}

}  // namespace

AccuracyReport label_match_accuracy(
    std::span<const Leaf> leaves, std::span<const std::size_t> residuals,
    std::span<const std::string> true_labels) {
  AccuracyReport report;
  std::vector<bool> seen(true_labels.size(), false);
  auto claim = [&](std::size_t i) {
    if (i >= true_labels.size()) {
      throw ValidationError("row " + std::to_string(i) + " has no true label");
    }
    if (seen[i]) {
      throw ValidationError("row " + std::to_string(i) +
                            " appears in more than one leaf or residual set");
    }
    seen[i] = true;
  };

  report.label_names.assign(true_labels.begin(), true_labels.end());
  std::sort(report.label_names.begin(), report.label_names.end());
  report.label_names.erase(
      std::unique(report.label_names.begin(), report.label_names.end()),
      report.label_names.end());
  auto label_column = [&](const std::string& label) {
    return static_cast<std::size_t>(
        std::lower_bound(report.label_names.begin(), report.label_names.end(),
                         label) -
        report.label_names.begin());
  };

  std::vector<const Leaf*> used;
  for (const auto& leaf : leaves) {
    if (leaf.members.empty()) {
      report.warnings.push_back("leaf " + leaf.node_id +
                                " is empty and was excluded");
      continue;
    }
    used.push_back(&leaf);
  }
  report.confusion = Matrix(used.size(), report.label_names.size());

  for (std::size_t r = 0; r < used.size(); ++r) {
    const Leaf& leaf = *used[r];
    report.leaf_ids.push_back(leaf.node_id);
    for (std::size_t i : leaf.members) {
      claim(i);
      report.confusion(r, label_column(true_labels[i])) += 1.0;
    }
    // Columns are sorted, so the first maximum is the smallest label.
    const auto counts = report.confusion.row(r);
    const auto best = static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    report.leaf_to_label[leaf.node_id] = report.label_names[best];
    report.n_correct += static_cast<std::size_t>(counts[best]);
    report.n_assigned += leaf.members.size();
  }
  for (std::size_t i : residuals) claim(i);
  report.n_residual = residuals.size();

  if (report.n_assigned > 0) {
    report.accuracy_assigned =
        double(report.n_correct) / double(report.n_assigned);
  }
  const std::size_t total = report.n_assigned + report.n_residual;
  if (total > 0) {
    report.accuracy_total = double(report.n_correct) / double(total);
  }
  return report;
}

RegressionFit ols(const Matrix& x, std::span<const double> y) {
  check_xy(x, y);
  const Centered c = center(x, y, true);
  if (c.x.cols() == 0) return finish(c, Eigen::VectorXd(), 0.0);
  const Eigen::BDCSVD<RowMatrix> svd(c.x, Eigen::ComputeThinU |
                                              Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double largest = s.size() ? s(0) : 0.0;
  const double smallest =
      static_cast<Eigen::Index>(s.size()) == c.x.cols() ? s(s.size() - 1)
                                                        : 0.0;
  if (!(largest > 0.0) || smallest <= 1e-10 * largest) {
    throw ValidationError(
        "ols: design matrix is rank deficient (smallest/largest singular "
        "value " +
        std::to_string(largest > 0.0 ? smallest / largest : 0.0) +
        "); use ridge regression instead");
  }
  const Eigen::VectorXd theta = svd.solve(c.y);
  return finish(c, theta, 0.0);
}

RegressionFit ridge(const Matrix& x, std::span<const double> y, double lambda,
                    const RidgeOptions& options) {
  check_xy(x, y);
  if (!(lambda >= 0.0)) throw ValidationError("ridge: lambda must be >= 0");
  const Centered c = center(x, y, options.fit_intercept);
  const Eigen::Index n = c.x.rows();
  const Eigen::Index p = c.x.cols();
  if (p == 0) return finish(c, Eigen::VectorXd(), lambda);

  // Augmented least squares [X; sqrt(lambda) I] theta ~ [y; 0]; stable at
  // lambda = 0 and continuous in lambda.
  Eigen::MatrixXd a(n + p, p);
  a.topRows(n) = c.x;
  a.bottomRows(p) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + p);
  b.head(n) = c.y;
  const Eigen::VectorXd theta = a.colPivHouseholderQr().solve(b);
  return finish(c, theta, lambda);
}

std::vector<double> default_lambda_grid() {
  return {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
}

double mean_squared_error(const RegressionFit& fit, const Matrix& x,
                          std::span<const double> y) {
  check_xy(x, y);
  if (x.cols() != fit.coefficients.size()) {
    throw ShapeError("mean_squared_error: coefficient count mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double r = y[i] - fit.intercept - dot(x.row(i), fit.coefficients);
    sum += r * r;
  }
  return sum / double(x.rows());
}

RegressionFit ridge_cv(const Matrix& x, std::span<const double> y,
                       const RidgeCvOptions& options) {
  check_xy(x, y);
  if (options.folds < 2) throw ValidationError("ridge_cv: folds must be >= 2");
  if (options.repeats == 0) {
    throw ValidationError("ridge_cv: repeats must be >= 1");
  }
  if (options.grid.empty()) throw ValidationError("ridge_cv: empty grid");
  if (x.rows() < options.folds) {
    throw ValidationError("ridge_cv: " + std::to_string(x.rows()) +
                          " rows cannot be split into " +
                          std::to_string(options.folds) + " folds");
  }
  std::vector<double> grid = options.grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double l : grid) {
    if (!(l >= 0.0)) throw ValidationError("ridge_cv: negative lambda");
  }

  const std::size_t n = x.rows();
  std::vector<double> total(grid.size(), 0.0);
  std::size_t evaluations = 0;
  for (std::size_t r = 0; r < options.repeats; ++r) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    SeededRng rng(options.seed, r);
    rng.shuffle(std::span<std::size_t>(perm));
    for (std::size_t f = 0; f < options.folds; ++f) {
      const std::size_t lo = f * n / options.folds;
      const std::size_t hi = (f + 1) * n / options.folds;
      std::vector<std::size_t> test(perm.begin() + lo, perm.begin() + hi);
      std::vector<std::size_t> train(perm.begin(), perm.begin() + lo);
      train.insert(train.end(), perm.begin() + hi, perm.end());
      std::sort(test.begin(), test.end());
      std::sort(train.begin(), train.end());
      const Matrix x_train = select_rows(x, train);
      const Matrix x_test = select_rows(x, test);
      std::vector<double> y_train(train.size()), y_test(test.size());
      for (std::size_t i = 0; i < train.size(); ++i) y_train[i] = y[train[i]];
      for (std::size_t i = 0; i < test.size(); ++i) y_test[i] = y[test[i]];
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const RegressionFit fit = ridge(x_train, y_train, grid[g]);
        total[g] += mean_squared_error(fit, x_test, y_test);
      }
      ++evaluations;
    }
  }

  std::map<double, double> table;
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double mse = total[g] / double(evaluations);
    table[grid[g]] = mse;
    if (mse < table[grid[best]]) best = g;
  }
  RegressionFit fit = ridge(x, y, grid[best]);
  fit.cv_mse = std::move(table);
  return fit;
}

std::vector<AlignmentRow> coeff_alignment(
    const std::map<std::string, RegressionFit>& sub_fits,
    const RegressionFit& population_fit,
    const std::map<std::string, std::vector<double>>& truth) {
  std::vector<AlignmentRow> rows;
  for (const auto& [group, fit] : sub_fits) {
    if (fit.coefficients.size() != population_fit.coefficients.size()) {
      throw ShapeError("coeff_alignment: group " + group +
                       " coefficient length differs from population fit");
    }
    AlignmentRow row;
    row.group = group;
    const auto pop =
        cosine_similarity(fit.coefficients, population_fit.coefficients);
    row.subgroup_vs_population = pop.value;
    row.zero_vector = pop.zero_vector;
    if (const auto it = truth.find(group); it != truth.end()) {
      if (it->second.size() != fit.coefficients.size()) {
        throw ShapeError("coeff_alignment: true coefficients for " + group +
                         " have the wrong length");
      }
      const auto sub_truth = cosine_similarity(fit.coefficients, it->second);
      const auto pop_truth =
          cosine_similarity(population_fit.coefficients, it->second);
      row.subgroup_vs_truth = sub_truth.value;
      row.population_vs_truth = pop_truth.value;
      row.zero_vector =
          row.zero_vector || sub_truth.zero_vector || pop_truth.zero_vector;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace phnmf
