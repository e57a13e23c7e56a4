#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "phnmf/matrix.hpp"
#include "phnmf/rng.hpp"

namespace phnmf {

/// Lower bound of the uniform initialization. Exact zeros are absorbing
/// under multiplicative updates, so initial entries are drawn from (1e-6, 1].
inline constexpr double kInitFloor = 1e-6;

struct NmfConfig {
  std::size_t rank = 2;
  std::size_t max_iters = 300;
  /// Stop when |f_t - f_{t-1}| / max(f_{t-1}, 1e-12) < rel_tol.
  double rel_tol = 1e-4;
  /// Added to every update denominator.
  double mu_epsilon = 1e-12;
  std::uint64_t seed = 0;

  /// Throws ValidationError on non-positive rank, iterations or tolerances.
  void validate() const;
};

struct Factorization {
  Matrix W;  // n x k
  Matrix H;  // k x m
  /// 0.5 * ||X - WH||_F^2 after each full (H, W) sweep.
  std::vector<double> objective_history;
  std::size_t iterations_run = 0;
  bool converged = false;
  std::uint64_t seed = 0;

  std::size_t rank() const noexcept { return H.rows(); }
  double final_objective() const noexcept {
    return objective_history.empty() ? 0.0 : objective_history.back();
  }
};

struct FactorPair {
  Matrix W;
  Matrix H;
};

/// W (n x k) then H (k x m), entries i.i.d. uniform on (kInitFloor, 1].
FactorPair init_factors(std::size_t n, std::size_t m, std::size_t k,
                        SeededRng& rng);

/// H <- H .* (W^T X) ./ (W^T W H + eps)
Matrix mu_update_h(const Matrix& x, const Matrix& w, const Matrix& h,
                   double mu_epsilon);
/// W <- W .* (X H^T) ./ (W H H^T + eps)
Matrix mu_update_w(const Matrix& x, const Matrix& w, const Matrix& h,
                   double mu_epsilon);

/// 0.5 * ||X - WH||_F^2
double nmf_objective(const Matrix& x, const Matrix& w, const Matrix& h);

/// Multiplicative-update NMF. Each iteration updates H, then W, then
/// records the objective. Throws ValidationError if X has a negative or
/// non-finite entry, ShapeError if the rank exceeds min(n, m).
Factorization nmf(const Matrix& x, const NmfConfig& config);

/// Writes W.csv, H.csv and meta.json (rank, seed, iterations, converged,
/// final objective) into `dir`.
void export_factorization(const std::filesystem::path& dir,
                          const Factorization& f);

}  // namespace phnmf
