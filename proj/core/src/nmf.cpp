#include "phnmf/nmf.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "eigen_map.hpp"
#include "phnmf/error.hpp"
#include "phnmf/matrix_io.hpp"

namespace phnmf {

namespace {

using detail::RowMatrix;
using detail::view;

void check_conformable(const Matrix& x, const Matrix& w, const Matrix& h) {
  if (w.rows() != x.rows() || h.cols() != x.cols() || w.cols() != h.rows()) {
    throw ShapeError("factor shapes " + std::to_string(w.rows()) + "x" +
                     std::to_string(w.cols()) + " * " +
                     std::to_string(h.rows()) + "x" +
                     std::to_string(h.cols()) + " do not match X " +
                     std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()));
  }
}

// Reusable buffers for one factorization.
struct Workspace {
  RowMatrix wtx, wtw, wtwh;  // k x m, k x k, k x m
  RowMatrix xht, hht, whht;  // n x k, k x k, n x k
};

template <class XT, class WT, class HT>
void update_h(const XT& x, const WT& w, HT& h, double eps, Workspace& ws) {
  ws.wtx.noalias() = w.transpose() * x;
  ws.wtw.noalias() = w.transpose() * w;
  ws.wtwh.noalias() = ws.wtw * h;
  h.array() *= ws.wtx.array() / (ws.wtwh.array() + eps);
}

template <class XT, class WT, class HT>
void update_w(const XT& x, WT& w, const HT& h, double eps, Workspace& ws) {
  ws.xht.noalias() = x * h.transpose();
  ws.hht.noalias() = h * h.transpose();
  ws.whht.noalias() = w * ws.hht;
  w.array() *= ws.xht.array() / (ws.whht.array() + eps);
}

}  // namespace

void NmfConfig::validate() const {
  if (rank == 0) throw ValidationError("NMF rank must be positive");
  if (max_iters == 0) throw ValidationError("max_iters must be positive");
  if (!(rel_tol > 0.0)) throw ValidationError("rel_tol must be positive");
  if (!(mu_epsilon > 0.0)) {
    throw ValidationError("mu_epsilon must be positive");
  }
}

FactorPair init_factors(std::size_t n, std::size_t m, std::size_t k,
                        SeededRng& rng) {
  if (n == 0 || m == 0 || k == 0) {
    throw ShapeError("init_factors: dimensions must be positive");
  }
  if (k > std::min(n, m)) {
    throw ShapeError("init_factors: rank " + std::to_string(k) +
                     " exceeds min(" + std::to_string(n) + ", " +
                     std::to_string(m) + ")");
  }
  FactorPair f{Matrix(n, k), Matrix(k, m)};
  for (double& v : f.W.values()) v = rng.uniform_left_open(kInitFloor, 1.0);
  for (double& v : f.H.values()) v = rng.uniform_left_open(kInitFloor, 1.0);
  return f;
}

Matrix mu_update_h(const Matrix& x, const Matrix& w, const Matrix& h,
                   double mu_epsilon) {
  check_conformable(x, w, h);
  Matrix out = h;
  auto hv = view(out);
  Workspace ws;
  update_h(view(x), view(w), hv, mu_epsilon, ws);
  return out;
}

Matrix mu_update_w(const Matrix& x, const Matrix& w, const Matrix& h,
                   double mu_epsilon) {
  check_conformable(x, w, h);
  Matrix out = w;
  auto wv = view(out);
  Workspace ws;
  update_w(view(x), wv, view(h), mu_epsilon, ws);
  return out;
}

double nmf_objective(const Matrix& x, const Matrix& w, const Matrix& h) {
  check_conformable(x, w, h);
  return 0.5 * (view(x) - view(w) * view(h)).squaredNorm();
}

Factorization nmf(const Matrix& x, const NmfConfig& config) {
  config.validate();
  if (x.rows() == 0 || x.cols() == 0) {
    throw ShapeError("nmf: empty input matrix");
  }
  if (!x.all_finite()) throw ValidationError("nmf: X has non-finite entries");
  if (!x.all_nonnegative()) {
    throw ValidationError("nmf: X has negative entries");
  }

  SeededRng rng(config.seed, 0);
  auto [w0, h0] = init_factors(x.rows(), x.cols(), config.rank, rng);

  Factorization f;
  f.seed = config.seed;
  f.W = std::move(w0);
  f.H = std::move(h0);
  f.objective_history.reserve(config.max_iters);

  const auto xv = view(x);
  auto wv = view(f.W);
  auto hv = view(f.H);
  Workspace ws;
  RowMatrix residual(xv.rows(), xv.cols());

  double previous = 0.0;
  for (std::size_t it = 0; it < config.max_iters; ++it) {
    update_h(xv, wv, hv, config.mu_epsilon, ws);
    update_w(xv, wv, hv, config.mu_epsilon, ws);

    residual.noalias() = wv * hv;
    residual -= xv;
    const double objective = 0.5 * residual.squaredNorm();
    f.objective_history.push_back(objective);
    f.iterations_run = it + 1;

    if (objective == 0.0) {
      f.converged = true;
      break;
    }
    if (it > 0 &&
        std::abs(objective - previous) / std::max(previous, 1e-12) <
            config.rel_tol) {
      f.converged = true;
      break;
    }
    previous = objective;
  }
  return f;
}

void export_factorization(const std::filesystem::path& dir,
                          const Factorization& f) {
  write_csv(dir / "W.csv", f.W);
  write_csv(dir / "H.csv", f.H);
  nlohmann::ordered_json meta;
  meta["rank"] = f.rank();
  meta["seed"] = f.seed;
  meta["iterations"] = f.iterations_run;
  meta["converged"] = f.converged;
  meta["final_objective"] = f.final_objective();
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

}  // namespace phnmf
