#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace blockdep {

using Vector = std::vector<double>;

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }
  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

namespace linalg {

double dot(const Vector& x, const Vector& y);
double norm2(const Vector& x);
double norm_inf(const Vector& x);

/// y = A x
void gemv(const Matrix& a, const Vector& x, Vector& y);

/// y = A^T x  (accumulated row-wise; A stays row-major)
void gemv_t(const Matrix& a, const Vector& x, Vector& y);

/// In-place lower Cholesky of a symmetric matrix. Returns false when a pivot
/// is not strictly positive (matrix not positive definite).
bool cholesky_in_place(Matrix& a);

/// Solve L L^T x = b given the lower factor produced above.
Vector cholesky_solve(const Matrix& l, const Vector& b);

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
/// Deterministic: starts from the all-ones and the alternating-sign vectors
/// and keeps the larger Rayleigh quotient (covers eigenspaces orthogonal to
/// the ones vector, e.g. negatively equicorrelated blocks).
double power_iteration_max_eig(const std::function<void(const Vector&, Vector&)>& apply,
                               std::size_t dim, std::size_t max_iter = 1000,
                               double tol = 1e-13);

double power_iteration_max_eig(const Matrix& sym, std::size_t max_iter = 1000,
                               double tol = 1e-13);

}  // namespace linalg
}  // namespace blockdep
