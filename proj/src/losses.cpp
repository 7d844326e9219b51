#include "blockdep/losses.hpp"

#include <cmath>

#include "blockdep/errors.hpp"

namespace blockdep {

namespace {

void require_valid(const LossKind& loss) {
  if (loss.kind == LossKind::Kind::huber && !(loss.eta > 0.0))
    throw ValidationError("huber loss requires eta > 0");
}

// Even blend for |r| on [-1, 1]: h(1) = h'(1) = 1, h''(1) = h'''(1) = 0,
// convex, h >= |u|, h(0) = 5/16.
double abs_blend(double u) {
  const double u2 = u * u;
  return (5.0 + u2 * (15.0 + u2 * (-5.0 + u2))) / 16.0;
}

double abs_blend_derivative(double u) {
  const double u2 = u * u;
  return u * (30.0 + u2 * (-20.0 + 6.0 * u2)) / 16.0;
}

// The smoothed Huber second derivative across the |r| = eta seam is the C^1
// step s(t) = (2 - 3t + t^3)/4 (1 at t=-1, 0 at t=1, zero slope at both
// ends). Below are its first and second integrals from -1: S(1) = 1,
// T(1) = 1.4.
double huber_step_int1(double t) {
  return (2.0 * t - 1.5 * t * t + 0.25 * t * t * t * t) / 4.0 + 13.0 / 16.0;
}

double huber_step_int2(double t) {
  const double t2 = t * t;
  return (t2 - 0.5 * t2 * t + 0.05 * t2 * t2 * t) / 4.0 + 13.0 * t / 16.0 + 0.45;
}

}  // namespace

std::string LossKind::name() const {
  switch (kind) {
    case Kind::squared:
      return "squared";
    case Kind::absolute:
      return "absolute";
    case Kind::huber:
      return "huber";
  }
  return "?";
}

double loss_value(const LossKind& loss, double r) {
  require_valid(loss);
  switch (loss.kind) {
    case LossKind::Kind::squared:
      return r * r;
    case LossKind::Kind::absolute:
      return std::fabs(r);
    case LossKind::Kind::huber: {
      const double a = std::fabs(r);
      return a <= loss.eta ? 0.5 * r * r : loss.eta * a - 0.5 * loss.eta * loss.eta;
    }
  }
  return 0.0;
}

double loss_derivative(const LossKind& loss, double r) {
  require_valid(loss);
  switch (loss.kind) {
    case LossKind::Kind::squared:
      return 2.0 * r;
    case LossKind::Kind::absolute:
      return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
    case LossKind::Kind::huber:
      return r > loss.eta ? loss.eta : (r < -loss.eta ? -loss.eta : r);
  }
  return 0.0;
}

double loss_curvature_bound(const LossKind& loss) {
  require_valid(loss);
  switch (loss.kind) {
    case LossKind::Kind::squared:
      return 2.0;
    case LossKind::Kind::huber:
      return 1.0;
    case LossKind::Kind::absolute:
      throw ValidationError("absolute loss has no curvature bound");
  }
  return 0.0;
}

double smoothed_loss(const LossKind& loss, double rho, double r) {
  require_valid(loss);
  if (!(rho > 0.0 && rho < 1.0))
    throw ValidationError("smoothing rho must lie in (0, 1)");
  const double w = 0.5 * rho;
  switch (loss.kind) {
    case LossKind::Kind::squared:
      return r * r;
    case LossKind::Kind::absolute: {
      const double a = std::fabs(r);
      if (a >= w) return a;
      return w * abs_blend(r / w);
    }
    case LossKind::Kind::huber: {
      const double eta = loss.eta;
      if (!(w < eta))
        throw ValidationError("huber smoothing requires rho < 2*eta");
      const double a = std::fabs(r);
      // Outer branch carries the blend's constant offset so the pieces join.
      const double offset = 0.1 * w * w;
      if (a <= eta - w) return 0.5 * r * r;
      if (a >= eta + w) return eta * a - 0.5 * eta * eta - offset;
      const double lo = eta - w;
      const double t = (a - eta) / w;
      return 0.5 * lo * lo + lo * (a - lo) + w * w * huber_step_int2(t);
    }
  }
  return 0.0;
}

double smoothed_loss_derivative(const LossKind& loss, double rho, double r) {
  require_valid(loss);
  if (!(rho > 0.0 && rho < 1.0))
    throw ValidationError("smoothing rho must lie in (0, 1)");
  const double w = 0.5 * rho;
  switch (loss.kind) {
    case LossKind::Kind::squared:
      return 2.0 * r;
    case LossKind::Kind::absolute: {
      if (std::fabs(r) >= w) return r > 0.0 ? 1.0 : -1.0;
      return abs_blend_derivative(r / w);
    }
    case LossKind::Kind::huber: {
      const double eta = loss.eta;
      if (!(w < eta))
        throw ValidationError("huber smoothing requires rho < 2*eta");
      const double a = std::fabs(r);
      const double sign = r >= 0.0 ? 1.0 : -1.0;
      if (a <= eta - w) return r;
      if (a >= eta + w) return sign * eta;
      const double t = (a - eta) / w;
      return sign * (eta - w + w * huber_step_int1(t));
    }
  }
  return 0.0;
}

double prox(const LossKind& loss, double x, double lambda) {
  require_valid(loss);
  if (!(lambda > 0.0)) throw ValidationError("prox requires lambda > 0");
  switch (loss.kind) {
    case LossKind::Kind::squared:
      return x / (1.0 + 2.0 * lambda);
    case LossKind::Kind::absolute: {
      const double a = std::fabs(x) - lambda;
      return a > 0.0 ? std::copysign(a, x) : 0.0;
    }
    case LossKind::Kind::huber: {
      const double cutoff = loss.eta * (1.0 + lambda);
      if (std::fabs(x) <= cutoff) return x / (1.0 + lambda);
      return x - std::copysign(lambda * loss.eta, x);
    }
  }
  return 0.0;
}

ProxDerivative prox_derivative(const LossKind& loss, double x, double lambda) {
  require_valid(loss);
  if (!(lambda > 0.0)) throw ValidationError("prox requires lambda > 0");
  const auto near = [](double a, double b) {
    return std::fabs(a - b) <= 1e-14 * std::max({1.0, std::fabs(a), std::fabs(b)});
  };
  switch (loss.kind) {
    case LossKind::Kind::squared:
      return {1.0 / (1.0 + 2.0 * lambda), false};
    case LossKind::Kind::absolute: {
      const double a = std::fabs(x);
      if (near(a, lambda)) return {0.0, true};
      return {a > lambda ? 1.0 : 0.0, false};
    }
    case LossKind::Kind::huber: {
      const double cutoff = loss.eta * (1.0 + lambda);
      const double inside = 1.0 / (1.0 + lambda);
      const double a = std::fabs(x);
      if (near(a, cutoff)) return {inside, true};
      return {a < cutoff ? inside : 1.0, false};
    }
  }
  return {0.0, false};
}

std::string EnvelopeShape::describe() const {
  if (coeff == 0.0) return "0";
  std::string s = std::to_string(coeff);
  if (power != 0.0) s += " * rho^" + std::to_string(power);
  return s;
}

LossProfile loss_profile(const LossKind& loss) {
  require_valid(loss);
  LossProfile profile;
  switch (loss.kind) {
    case LossKind::Kind::squared:
      // |l'| ~ |l|^{1/2}, l'' constant, l''' = 0.
      profile.q0 = 2.0;
      profile.q1 = 0.5;
      profile.q2 = 0.0;
      profile.q3 = 0.0;
      profile.m_ell = {0.0, 0.0};
      profile.d_ell = {1.0, 0.0};
      profile.qbar0_catalog = 4;
      break;
    case LossKind::Kind::absolute:
      profile.q0 = 1.0;
      profile.q1 = profile.q2 = profile.q3 = 0.0;
      profile.m_ell = {1.0, 1.0};
      profile.d_ell = {1.0, -2.0};
      profile.qbar0_catalog = 0;
      break;
    case LossKind::Kind::huber:
      profile.q0 = 1.0;
      profile.q1 = profile.q2 = profile.q3 = 0.0;
      profile.m_ell = {1.0, 1.0};
      profile.d_ell = {1.0, -2.0};
      profile.qbar0_catalog = 3;  // published figure; formula below gives 0
      break;
  }
  profile.q_bold =
      std::max({3.0 * profile.q1, profile.q1 + profile.q2, profile.q3});
  profile.qbar0 =
      2 * static_cast<int>(std::ceil(profile.q0 * profile.q_bold / 2.0));
  profile.qbar0_mismatch = profile.qbar0 != profile.qbar0_catalog;
  profile.rho_bar = 1.0;
  return profile;
}

double q_star(int qbar0) { return std::exp2((qbar0 + 4) / 2.0); }

}  // namespace blockdep
