// Independent reference implementations used only by the tests. These stay
// deliberately naive: enumeration, scalar minimization, dense eigensolving,
// brute quadrature. None of them share code with the library paths they
// check.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "blockdep/linalg.hpp"
#include "blockdep/partition.hpp"
#include "blockdep/rng.hpp"

namespace oracles {

/// Golden-section search for the minimizer of a unimodal scalar function.
/// The bracket [lo, hi] must contain the minimizer.
inline double golden_section_argmin(const std::function<double(double)>& f,
                                    double lo, double hi, double tol = 1e-10) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
inline double jacobi_max_eigenvalue(blockdep::Matrix a, int sweeps = 100) {
  const std::size_t n = a.rows;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  double lam = a(0, 0);
  for (std::size_t i = 1; i < n; ++i) lam = std::max(lam, a(i, i));
  return lam;
}

/// Composite Simpson rule on [lo, hi].
inline double simpson(const std::function<double(double)>& f, double lo,
                      double hi, int intervals = 4096) {
  if (intervals % 2 == 1) ++intervals;
  const double h = (hi - lo) / intervals;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i)
    acc += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

/// E[g(Z)] for Z ~ N(0,1) by brute quadrature over [-12, 12].
inline double gaussian_expectation(const std::function<double(double)>& g,
                                   int intervals = 200000) {
  return simpson(
      [&g](double z) {
        return g(z) * 0.3989422804014327 * std::exp(-0.5 * z * z);
      },
      -12.0, 12.0, intervals);
}

/// sigma_n recomputed along an independent route: exponents kept as exact
/// rationals and applied through an explicit exp/log evaluation.
struct Rational {
  long long num;
  long long den;
  double value() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }
};

inline double rational_power(double base, Rational e) {
  return std::exp(e.value() * std::log(base));
}

inline double sigma_n_rational(double n, double p, double d, int qbar0) {
  // p d^{(6+qbar0)/2} n^{-5/2} + p d^{2} n^{-3/2} + p d^{qbar0+2} n^{-(qbar0+3)/2}
  const double t1 = p * rational_power(d, {6 + qbar0, 2}) /
                    rational_power(n, {5, 2});
  const double t2 = p * rational_power(d, {2, 1}) / rational_power(n, {3, 2});
  const double t3 = p * rational_power(d, {qbar0 + 2, 1}) /
                    rational_power(n, {qbar0 + 3, 2});
  return t1 + t2 + t3;
}

/// Uniform random partition of [p] with cell sizes in [1, d].
inline blockdep::Partition random_partition(std::size_t p, std::size_t d,
                                            blockdep::Rng& rng) {
  std::vector<std::uint32_t> order(p);
  for (std::size_t i = 0; i < p; ++i) order[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = p; i > 1; --i) {
    const std::size_t j = rng.next_u64() % i;
    std::swap(order[i - 1], order[j]);
  }
  blockdep::Partition partition;
  partition.p = p;
  std::size_t pos = 0;
  while (pos < p) {
    const std::size_t size =
        1 + static_cast<std::size_t>(rng.next_u64() % std::min(d, p - pos));
    partition.cells.emplace_back(order.begin() + pos, order.begin() + pos + size);
    pos += size;
  }
  return partition;
}

/// Analytic reduction of the squared-loss fixed point: eq2 becomes the
/// quadratic 2 lambda b^2 + (lambda + 2a) b + (a - 1) = 0 with a = 1 - 1/tau0,
/// and eq1 solves for gamma^2 in closed form.
struct SquaredLossFixedPoint {
  double beta;
  double gamma;
};

inline SquaredLossFixedPoint squared_loss_fixed_point(double tau0,
                                                      double lambda,
                                                      double noise_second_moment,
                                                      double pi0_second_moment) {
  const double a = 1.0 - 1.0 / tau0;
  const double qa = 2.0 * lambda;
  const double qb = lambda + 2.0 * a;
  const double qc = a - 1.0;
  const double beta = (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
  const double shrink = 2.0 * beta / (1.0 + 2.0 * beta);
  const double denom = 1.0 / tau0 - shrink * shrink;
  const double gamma_sq = (shrink * shrink * noise_second_moment +
                           lambda * lambda * beta * beta * pi0_second_moment) /
                          denom;
  return {beta, std::sqrt(gamma_sq)};
}

}  // namespace oracles
