#include "blockdep/linalg.hpp"

#include <cassert>
#include <cmath>

#include "blockdep/kernels.hpp"

namespace blockdep::linalg {

namespace {
const kernels::Backend& k() { return kernels::active(); }
}  // namespace

double dot(const Vector& x, const Vector& y) {
  assert(x.size() == y.size());
  return k().dot(x.data(), y.data(), x.size());
}

double norm2(const Vector& x) {
  return std::sqrt(k().sumsq(x.data(), x.size()));
}

double norm_inf(const Vector& x) { return k().max_abs(x.data(), x.size()); }

void gemv(const Matrix& a, const Vector& x, Vector& y) {
  assert(x.size() == a.cols);
  y.resize(a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    y[i] = k().dot(a.row(i), x.data(), a.cols);
}

void gemv_t(const Matrix& a, const Vector& x, Vector& y) {
  assert(x.size() == a.rows);
  y.assign(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i)
    if (x[i] != 0.0) k().axpy(x[i], a.row(i), y.data(), a.cols);
}

bool cholesky_in_place(Matrix& a) {
  assert(a.rows == a.cols);
  const std::size_t n = a.rows;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) - k().sumsq(a.row(j), j);
    if (d <= 0.0 || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    a(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i)
      a(i, j) = (a(i, j) - k().dot(a.row(i), a.row(j), j)) / d;
  }
  // Zero the strict upper triangle so the factor can be used as a plain matrix.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = 0.0;
  return true;
}

Vector cholesky_solve(const Matrix& l, const Vector& b) {
  assert(l.rows == l.cols && b.size() == l.rows);
  const std::size_t n = l.rows;
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i)
    y[i] = (b[i] - k().dot(l.row(i), y.data(), i)) / l(i, i);
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= l(j, ii) * x[j];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

double power_iteration_max_eig(
    const std::function<void(const Vector&, Vector&)>& apply, std::size_t dim,
    std::size_t max_iter, double tol) {
  assert(dim > 0);
  double best = 0.0;
  for (int start = 0; start < 2; ++start) {
    Vector v(dim);
    for (std::size_t i = 0; i < dim; ++i)
      v[i] = (start == 0) ? 1.0 : ((i % 2 == 0) ? 1.0 : -1.0);
    double nv = norm2(v);
    for (auto& e : v) e /= nv;
    Vector av(dim);
    double lambda = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
      apply(v, av);
      const double next = dot(v, av);  // Rayleigh quotient, ||v|| = 1
      const double na = norm2(av);
      if (na == 0.0) {
        lambda = 0.0;
        break;
      }
      for (std::size_t i = 0; i < dim; ++i) v[i] = av[i] / na;
      if (std::fabs(next - lambda) <= tol * std::max(1.0, std::fabs(next))) {
        lambda = next;
        break;
      }
      lambda = next;
    }
    best = std::max(best, lambda);
  }
  return best;
}

double power_iteration_max_eig(const Matrix& sym, std::size_t max_iter,
                               double tol) {
  return power_iteration_max_eig(
      [&sym](const Vector& x, Vector& y) { gemv(sym, x, y); }, sym.rows,
      max_iter, tol);
}

}  // namespace blockdep::linalg
