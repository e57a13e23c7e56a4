#pragma once

#include <span>
#include <vector>

#include "phnmf/matrix.hpp"

namespace phnmf {

/// C = A * B. Throws ShapeError when A.cols() != B.rows().
Matrix matmul(const Matrix& a, const Matrix& b);
/// C = A^T * B without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// C = A * B^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

double frobenius_norm(const Matrix& a);
double trace(const Matrix& a);

double dot(std::span<const double> u, std::span<const double> v);
double norm2(std::span<const double> u);

struct Cosine {
  double value = 0.0;
  /// Set when either argument is the zero vector; value is then 0.
  bool zero_vector = false;
};

/// <u, v> / (|u| |v|). A zero argument yields 0 with the warning flag set
/// rather than an error, so degenerate factor rows cannot abort a run.
Cosine cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Rows of `a` listed in `indices`, in that order.
Matrix select_rows(const Matrix& a, std::span<const std::size_t> indices);
/// Horizontal concatenation; all parts must share a row count.
Matrix hstack(std::span<const Matrix> parts);

/// Singular values in non-increasing order.
std::vector<double> singular_values(const Matrix& a);

}  // namespace phnmf
