#pragma once

#include <cstddef>
#include <string>

namespace blockdep::kernels {

/// Dispatch table for the data-parallel inner loops.
///
/// Every entry has a scalar reference implementation and (on x86-64 with
/// AVX2+FMA) a vectorized variant. The two are equivalence-tested against
/// each other; the active table is chosen once at startup. SIMD variants may
/// reassociate reductions, so cross-backend agreement is to rounding, not
/// bitwise — within one process the selection is fixed, which keeps seeded
/// runs byte-reproducible.
struct Backend {
  const char* name;

  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x *= a
  void (*scale)(double a, double* x, std::size_t n);
  // out = a - b
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*sumsq)(const double* x, std::size_t n);
  double (*max_abs)(const double* x, std::size_t n);
  // out_i = sign(v_i) * max(|v_i| - t, 0)
  void (*soft_threshold)(const double* v, double t, double* out, std::size_t n);
  // out_i = min(max(v_i, lo), hi)
  void (*clamp)(const double* v, double lo, double hi, double* out,
                std::size_t n);
  // sum += x_i * y_i and sumsq += (x_i * y_i)^2 in one pass
  void (*dot_and_sq)(const double* x, const double* y, std::size_t n,
                     double* sum_out, double* sumsq_out);
};

const Backend& scalar();

/// AVX2+FMA table, or nullptr when the CPU lacks the extensions.
const Backend* avx2_or_null();

/// Table selected at startup: AVX2 when available, else scalar.
/// BLOCKDEP_SIMD=scalar|avx2 forces a choice (invalid/unavailable -> scalar).
const Backend& active();

bool avx2_available();

}  // namespace blockdep::kernels
