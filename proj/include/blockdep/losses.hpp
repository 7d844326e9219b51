#pragma once

#include <string>

namespace blockdep {

/// The three supported residual losses. Huber uses the continuous r^2/2
/// branch so the two pieces agree at |r| = eta.
struct LossKind {
  enum class Kind { squared, absolute, huber };
  Kind kind = Kind::squared;
  double eta = 1.0;  // huber only, > 0

  static LossKind squared() { return {Kind::squared, 0.0}; }
  static LossKind absolute() { return {Kind::absolute, 0.0}; }
  static LossKind huber(double eta) { return {Kind::huber, eta}; }

  std::string name() const;
};

double loss_value(const LossKind& loss, double r);

/// Weak derivative (sign at 0 taken as 0 for the absolute loss).
double loss_derivative(const LossKind& loss, double r);

/// Upper bound on the loss second derivative (gradient Lipschitz module for
/// the smooth losses; throws for the absolute loss).
double loss_curvature_bound(const LossKind& loss);

/// C^3 approximation with sup-gap <= rho: the kink of the absolute loss is
/// replaced by an even polynomial blend on [-rho/2, rho/2]; the Huber loss
/// gets a C^1 second-derivative blend of width rho around |r| = eta; the
/// squared loss is returned unchanged. Requires rho in (0, 1).
double smoothed_loss(const LossKind& loss, double rho, double r);
double smoothed_loss_derivative(const LossKind& loss, double rho, double r);

/// Moreau proximal operator argmin_z { (x-z)^2 / (2 lambda) + loss(z) }.
/// Closed forms for all three losses; lambda must be positive.
double prox(const LossKind& loss, double x, double lambda);

struct ProxDerivative {
  double value = 0.0;
  bool at_kink = false;  // |x| sits exactly on a nondifferentiability point
};

/// d prox / dx. At a kink the interior-limit value is returned and flagged
/// (absolute: 0; huber: 1/(1+lambda)).
ProxDerivative prox_derivative(const LossKind& loss, double x, double lambda);

/// Shape of an envelope rho -> coeff * rho^power.
struct EnvelopeShape {
  double coeff = 0.0;
  double power = 0.0;

  std::string describe() const;
};

/// Smoothness exponents of the loss together with the smoothing envelopes.
/// qbar0 is the formula value 2*ceil(q0*q_bold/2); qbar0_catalog keeps the
/// published per-loss figure, which disagrees for Huber (3 vs 0) and is
/// flagged rather than silently replaced. Rate formulas take qbar0 as an
/// argument, so callers can evaluate either.
struct LossProfile {
  double q0 = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
  double q_bold = 0.0;   // max{3 q1, q1 + q2, q3}
  int qbar0 = 0;         // 2 * ceil(q0 * q_bold / 2)
  int qbar0_catalog = 0;
  bool qbar0_mismatch = false;
  EnvelopeShape m_ell;   // sup-gap of the smoothing
  EnvelopeShape d_ell;   // derivative envelope
  double rho_bar = 1.0;
};

LossProfile loss_profile(const LossKind& loss);

/// Moment order q* = 2^{(qbar0+4)/2} required of the covariate entries.
double q_star(int qbar0);

}  // namespace blockdep
