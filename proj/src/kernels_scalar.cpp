#include "blockdep/kernels.hpp"

#include <cmath>

namespace blockdep::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double sumsq_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

double max_abs_scalar(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

void soft_threshold_scalar(const double* v, double t, double* out,
                           std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::fabs(v[i]) - t;
    out[i] = a > 0.0 ? std::copysign(a, v[i]) : 0.0;
  }
}

void clamp_scalar(const double* v, double lo, double hi, double* out,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = v[i] < lo ? lo : (v[i] > hi ? hi : v[i]);
}

void dot_and_sq_scalar(const double* x, const double* y, std::size_t n,
                       double* sum_out, double* sumsq_out) {
  double s = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = x[i] * y[i];
    s += p;
    sq += p * p;
  }
  *sum_out = s;
  *sumsq_out = sq;
}

const Backend kScalar = {
    "scalar",        dot_scalar,   axpy_scalar,
    scale_scalar,    sub_scalar,   sum_scalar,
    sumsq_scalar,    max_abs_scalar, soft_threshold_scalar,
    clamp_scalar,    dot_and_sq_scalar,
};

}  // namespace

const Backend& scalar() { return kScalar; }

}  // namespace blockdep::kernels
