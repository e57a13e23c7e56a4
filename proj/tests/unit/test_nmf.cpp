#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "phnmf/error.hpp"
#include "phnmf/linalg.hpp"
#include "phnmf/matrix_io.hpp"
#include "phnmf/nmf.hpp"
#include "phnmf/rng.hpp"
#include "phnmf/synthgen.hpp"

using namespace phnmf;

namespace {

Matrix random_nonneg(std::size_t r, std::size_t c, SeededRng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform();
  return m;
}

double relative_residual(const Matrix& x, const Factorization& f) {
  return std::sqrt(2.0 * nmf_objective(x, f.W, f.H)) / frobenius_norm(x);
}

}  // namespace

TEST_CASE("init_factors shapes, range and determinism") {
  SeededRng a(7), b(7), c(7, 1);
  const auto f = init_factors(2, 3, 1, a);
  CHECK(f.W.rows() == 2);
  CHECK(f.W.cols() == 1);
  CHECK(f.H.rows() == 1);
  CHECK(f.H.cols() == 3);
  for (double v : f.W.values()) CHECK((v > kInitFloor && v <= 1.0));
  for (double v : f.H.values()) CHECK((v > kInitFloor && v <= 1.0));

  const auto g = init_factors(2, 3, 1, b);
  CHECK(g.W == f.W);
  CHECK(g.H == f.H);
  CHECK_FALSE(init_factors(2, 3, 1, c).W == f.W);

  SeededRng r(1);
  CHECK_THROWS_AS(init_factors(2, 3, 3, r), ShapeError);
  CHECK_THROWS_AS(init_factors(0, 3, 1, r), ShapeError);
}

TEST_CASE("mu_update_h scalar and fixed point") {
  const double eps = 1e-12;
  const Matrix h = mu_update_h(Matrix::from_rows({{2}}), Matrix::from_rows({{1}}),
                               Matrix::from_rows({{1}}), eps);
  CHECK(h(0, 0) == doctest::Approx(2.0 / (1.0 + eps)).epsilon(1e-15));

  SeededRng rng(4);
  const Matrix w = random_nonneg(6, 2, rng);
  const Matrix h0 = random_nonneg(2, 5, rng);
  const Matrix x = matmul(w, h0);
  const Matrix h1 = mu_update_h(x, w, h0, eps);
  for (std::size_t i = 0; i < h0.size(); ++i) {
    CHECK(h1.data()[i] == doctest::Approx(h0.data()[i]).epsilon(1e-10));
  }

  Matrix hz = h0;
  for (double& v : hz.row(1)) v = 0.0;
  const Matrix hz1 = mu_update_h(x, w, hz, eps);
  for (double v : std::as_const(hz1).row(1)) CHECK(v == 0.0);

  CHECK_THROWS_AS(mu_update_h(x, w, Matrix(3, 5), eps), ShapeError);
}

TEST_CASE("mu_update_w scalar and fixed point") {
  const double eps = 1e-12;
  const Matrix w = mu_update_w(Matrix::from_rows({{4}}), Matrix::from_rows({{1}}),
                               Matrix::from_rows({{2}}), eps);
  CHECK(w(0, 0) == doctest::Approx(8.0 / (4.0 + eps)).epsilon(1e-15));

  SeededRng rng(5);
  const Matrix w0 = random_nonneg(6, 2, rng);
  const Matrix h = random_nonneg(2, 5, rng);
  const Matrix x = matmul(w0, h);
  const Matrix w1 = mu_update_w(x, w0, h, eps);
  for (std::size_t i = 0; i < w0.size(); ++i) {
    CHECK(w1.data()[i] == doctest::Approx(w0.data()[i]).epsilon(1e-10));
  }

  Matrix wz = w0;
  for (std::size_t i = 0; i < wz.rows(); ++i) wz(i, 0) = 0.0;
  const Matrix wz1 = mu_update_w(x, wz, h, eps);
  for (std::size_t i = 0; i < wz1.rows(); ++i) CHECK(wz1(i, 0) == 0.0);
}

TEST_CASE("nmf recovers an exactly rank-one matrix") {
  const std::vector<double> u{1, 2, 3}, v{4, 5};
  Matrix x(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) x(i, j) = u[i] * v[j];
  NmfConfig c;
  c.rank = 1;
  c.seed = 3;
  const auto f = nmf(x, c);
  CHECK(relative_residual(x, f) <= 1e-4);
  CHECK(f.rank() == 1);
}

TEST_CASE("nmf on the zero matrix stops at the first iteration") {
  NmfConfig c;
  c.rank = 2;
  const Matrix x(4, 4);
  const auto f = nmf(x, c);
  CHECK(f.iterations_run == 1);
  CHECK(f.converged);
  CHECK(f.final_objective() == 0.0);
  CHECK(frobenius_norm(matmul(f.W, f.H)) == 0.0);
}

TEST_CASE("nmf objective is monotone and factors stay nonnegative") {
  SeededRng rng(2024);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + rng.index(10), m = 3 + rng.index(10);
    const Matrix x = random_nonneg(n, m, rng);
    NmfConfig c;
    c.rank = 1 + rng.index(std::min(n, m));
    c.max_iters = 100;
    c.rel_tol = 1e-9;
    c.seed = rng.next_u64();
    const auto f = nmf(x, c);
    bool monotone = true;
    for (std::size_t i = 1; i < f.objective_history.size(); ++i) {
      monotone = monotone &&
                 f.objective_history[i] <= f.objective_history[i - 1] + 1e-10;
    }
    CHECK(monotone);
    CHECK(f.W.all_nonnegative());
    CHECK(f.H.all_nonnegative());
  }
}

TEST_CASE("nmf is deterministic for a fixed seed") {
  SeededRng rng(8);
  const Matrix x = random_nonneg(20, 12, rng);
  NmfConfig c;
  c.rank = 3;
  c.seed = 99;
  const auto a = nmf(x, c);
  const auto b = nmf(x, c);
  CHECK(a.W == b.W);
  CHECK(a.H == b.H);
  CHECK(a.objective_history == b.objective_history);
  c.seed = 100;
  CHECK_FALSE(nmf(x, c).W == a.W);
}

TEST_CASE("nmf convergence rule and iteration cap") {
  SeededRng rng(12);
  const Matrix x = random_nonneg(30, 20, rng);
  NmfConfig c;
  c.rank = 4;
  c.max_iters = 5;
  c.rel_tol = 1e-15;
  const auto capped = nmf(x, c);
  CHECK(capped.iterations_run == 5);
  CHECK_FALSE(capped.converged);

  c.max_iters = 5000;
  c.rel_tol = 1e-4;
  const auto f = nmf(x, c);
  CHECK(f.converged);
  const auto& h = f.objective_history;
  REQUIRE(h.size() >= 2);
  const double last = h[h.size() - 1], prev = h[h.size() - 2];
  CHECK(std::abs(last - prev) / std::max(prev, 1e-12) < 1e-4);
  for (std::size_t i = 1; i + 1 < h.size(); ++i) {
    CHECK(std::abs(h[i] - h[i - 1]) / std::max(h[i - 1], 1e-12) >= 1e-4);
  }
}

TEST_CASE("nmf residual is scale consistent") {
  SeededRng rng(13);
  const Matrix x = random_nonneg(25, 15, rng);
  Matrix cx = x;
  for (double& v : cx.values()) v *= 250.0;
  NmfConfig c;
  c.rank = 3;
  c.seed = 1;
  const double r1 = relative_residual(x, nmf(x, c));
  const double r2 = relative_residual(cx, nmf(cx, c));
  CHECK(std::abs(r1 - r2) <= 0.1 * r1);
}

TEST_CASE("nmf rejects invalid input") {
  NmfConfig c;
  CHECK_THROWS_AS(nmf(Matrix::from_rows({{1, -1}, {1, 1}}), c),
                  ValidationError);
  CHECK_THROWS_AS(nmf(Matrix::from_rows({{1, NAN}, {1, 1}}), c),
                  ValidationError);
  CHECK_THROWS_AS(nmf(Matrix(), c), ShapeError);
  c.rank = 3;
  CHECK_THROWS_AS(nmf(Matrix(2, 2, 1.0), c), ShapeError);
  c.rank = 0;
  CHECK_THROWS_AS(nmf(Matrix(2, 2, 1.0), c), ValidationError);
  c.rank = 1;
  c.rel_tol = 0.0;
  CHECK_THROWS_AS(nmf(Matrix(2, 2, 1.0), c), ValidationError);
}

TEST_CASE("nmf on the synthetic continuous data at rank 4") {
  const auto data = generate(SyntheticSpec::continuous(1));
  NmfConfig c;
  c.rank = 4;
  c.seed = 1;
  const auto f = nmf(data.X, c);
  // Observed 0.0075 on this replicate.
  CHECK(relative_residual(data.X, f) <= 0.15);
}

TEST_CASE("export_factorization writes factors and metadata") {
  const auto dir = std::filesystem::temp_directory_path() / "phnmf_test_nmf";
  std::filesystem::remove_all(dir);
  SeededRng rng(3);
  const Matrix x = random_nonneg(6, 4, rng);
  NmfConfig c;
  c.rank = 2;
  const auto f = nmf(x, c);
  export_factorization(dir, f);
  CHECK(read_csv(dir / "W.csv") == f.W);
  CHECK(read_csv(dir / "H.csv") == f.H);
  CHECK(read_text(dir / "meta.json").find("\"rank\": 2") != std::string::npos);
}
