#include "phnmf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eigen_map.hpp"
#include "phnmf/error.hpp"

namespace phnmf {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + dims(a) + " by " + dims(b));
  }
  Matrix c(a.rows(), b.cols());
  detail::view(c).noalias() = detail::view(a) * detail::view(b);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: cannot multiply (" + dims(a) + ")^T by " +
                     dims(b));
  }
  Matrix c(a.cols(), b.cols());
  detail::view(c).noalias() = detail::view(a).transpose() * detail::view(b);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: cannot multiply " + dims(a) + " by (" +
                     dims(b) + ")^T");
  }
  Matrix c(a.rows(), b.rows());
  detail::view(c).noalias() = detail::view(a) * detail::view(b).transpose();
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

double trace(const Matrix& a) {
  double s = 0.0;
  const std::size_t n = std::min(a.rows(), a.cols());
  for (std::size_t i = 0; i < n; ++i) s += a(i, i);
  return s;
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ShapeError("dot: length " + std::to_string(u.size()) + " vs " +
                     std::to_string(v.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double norm2(std::span<const double> u) { return std::sqrt(dot(u, u)); }

Cosine cosine_similarity(std::span<const double> u,
                         std::span<const double> v) {
  const double uv = dot(u, v);
  const double nu = norm2(u);
  const double nv = norm2(v);
  if (nu == 0.0 || nv == 0.0) return {0.0, true};
  return {std::clamp(uv / (nu * nv), -1.0, 1.0), false};
}

Matrix select_rows(const Matrix& a, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), a.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= a.rows()) {
      throw ShapeError("select_rows: index " + std::to_string(indices[r]) +
                       " out of range for " + dims(a));
    }
    const auto src = a.row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix hstack(std::span<const Matrix> parts) {
  if (parts.empty()) return {};
  const std::size_t n = parts.front().rows();
  std::size_t width = 0;
  for (const auto& p : parts) {
    if (p.rows() != n) {
      throw ShapeError("hstack: row count " + std::to_string(p.rows()) +
                       " differs from " + std::to_string(n));
    }
    width += p.cols();
  }
  Matrix out(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const auto src = p.row(i);
      std::copy(src.begin(), src.end(), out.row(i).begin() + offset);
      offset += p.cols();
    }
  }
  return out;
}

std::vector<double> singular_values(const Matrix& a) {
  if (a.empty()) return {};
  Eigen::BDCSVD<detail::RowMatrix> svd(detail::view(a));
  const auto& s = svd.singularValues();
  return std::vector<double>(s.data(), s.data() + s.size());
}

}  // namespace phnmf
