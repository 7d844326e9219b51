#include <doctest.h>

#include <cmath>

#include "blockdep/errors.hpp"
#include "blockdep/losses.hpp"
#include "blockdep/rng.hpp"
#include "oracles.hpp"

using namespace blockdep;

namespace {
const LossKind kAll[] = {LossKind::squared(), LossKind::absolute(),
                         LossKind::huber(1.0)};
}

TEST_CASE("loss values") {
  CHECK(loss_value(LossKind::squared(), 0.0) == 0.0);
  CHECK(loss_value(LossKind::absolute(), -3.0) == 3.0);
  CHECK(loss_value(LossKind::huber(1.0), 2.0) == doctest::Approx(1.5));
  CHECK(loss_value(LossKind::huber(1.0), 0.5) == doctest::Approx(0.125));
  CHECK_THROWS_AS(loss_value(LossKind::huber(0.0), 1.0), ValidationError);
}

TEST_CASE("prox closed forms vs golden-section minimization") {
  for (const LossKind& loss : kAll) {
    for (double x = -10.0; x <= 10.0 + 1e-9; x += 0.5) {
      for (double lambda : {0.1, 1.0, 10.0}) {
        const double via_formula = prox(loss, x, lambda);
        // prox shrinks toward 0, so the bracket must span 0 as well as x
        const double lo = std::min(x, 0.0) - 3.0 * lambda - 3.0;
        const double hi = std::max(x, 0.0) + 3.0 * lambda + 3.0;
        const double via_search = oracles::golden_section_argmin(
            [&](double z) {
              return (x - z) * (x - z) / (2.0 * lambda) + loss_value(loss, z);
            },
            lo, hi);
        CHECK(std::fabs(via_formula - via_search) <= 1e-6);
      }
    }
  }
  // the three worked examples
  CHECK(prox(LossKind::absolute(), 3.0, 1.0) == doctest::Approx(2.0));
  CHECK(prox(LossKind::absolute(), 0.5, 1.0) == doctest::Approx(0.0));
  CHECK(prox(LossKind::huber(1.0), 0.5, 1.0) == doctest::Approx(0.25));
}

TEST_CASE("prox derivative vs central differences") {
  Rng rng(5150);
  for (const LossKind& loss : kAll) {
    int tested = 0;
    while (tested < 1000) {
      const double x = 6.0 * rng.normal();
      const double lambda = std::exp(rng.normal());
      const ProxDerivative d = prox_derivative(loss, x, lambda);
      if (d.at_kink) continue;
      // skip points whose +-h neighborhood straddles a kink
      const double h = 1e-6;
      const double away =
          loss.kind == LossKind::Kind::absolute
              ? std::fabs(std::fabs(x) - lambda)
              : (loss.kind == LossKind::Kind::huber
                     ? std::fabs(std::fabs(x) - loss.eta * (1.0 + lambda))
                     : 1.0);
      if (away < 4.0 * h) continue;
      const double fd =
          (prox(loss, x + h, lambda) - prox(loss, x - h, lambda)) / (2.0 * h);
      CHECK(std::fabs(d.value - fd) <= 1e-4);
      ++tested;
    }
  }
  CHECK(prox_derivative(LossKind::absolute(), 5.0, 1.0).value == 1.0);
  CHECK(prox_derivative(LossKind::absolute(), 0.2, 1.0).value == 0.0);
  CHECK(prox_derivative(LossKind::squared(), 123.0, 0.5).value ==
        doctest::Approx(0.5));
  CHECK(prox_derivative(LossKind::absolute(), 1.0, 1.0).at_kink);
}

TEST_CASE("prox is nonexpansive") {
  Rng rng(808);
  for (const LossKind& loss : kAll) {
    for (int t = 0; t < 10000; ++t) {
      const double x = 8.0 * rng.normal();
      const double y = 8.0 * rng.normal();
      const double lambda = std::exp(rng.normal());
      const double gap = std::fabs(x - y);
      CHECK(std::fabs(prox(loss, x, lambda) - prox(loss, y, lambda)) <=
            gap * (1.0 + 1e-12) + 1e-15);
    }
  }
}

TEST_CASE("smoothed losses: gap bound, exactness off the blend, C3 seams") {
  SUBCASE("squared is untouched") {
    CHECK(smoothed_loss(LossKind::squared(), 0.3, 1.3) == doctest::Approx(1.69));
  }
  SUBCASE("absolute: sup gap over a dense grid is at most rho") {
    for (double rho : {0.01, 0.1, 0.5}) {
      double sup = 0.0;
      for (double r = -5.0; r <= 5.0; r += 1e-3) {
        const double gap =
            std::fabs(smoothed_loss(LossKind::absolute(), rho, r) - std::fabs(r));
        sup = std::max(sup, gap);
      }
      CHECK(sup <= rho);
      CHECK(sup > 0.0);
    }
    CHECK(smoothed_loss(LossKind::absolute(), 0.1, 3.0) == 3.0);
  }
  SUBCASE("huber: sup gap at most rho, exact away from the seam") {
    const LossKind loss = LossKind::huber(1.0);
    for (double rho : {0.05, 0.4}) {
      double sup = 0.0;
      for (double r = -4.0; r <= 4.0; r += 1e-3)
        sup = std::max(sup, std::fabs(smoothed_loss(loss, rho, r) -
                                      loss_value(loss, r)));
      CHECK(sup <= rho);
    }
    CHECK(smoothed_loss(loss, 0.1, 0.3) == doctest::Approx(0.045));
  }
  SUBCASE("third finite differences stay bounded through the blend zone") {
    // a C^3 function has third differences ~ f'''(r) h^3; a C^2-only kink
    // would blow up at h^-? scale. Compare against the interior magnitude.
    const double h = 1e-3;
    for (const LossKind& loss : {LossKind::absolute(), LossKind::huber(1.0)}) {
      const double rho = 0.2;
      double worst = 0.0;
      for (double r = -1.5; r <= 1.5; r += h / 3.0) {
        const auto f = [&](double t) { return smoothed_loss(loss, rho, t); };
        const double d3 = (f(r + 2 * h) - 3 * f(r + h) + 3 * f(r) - f(r - h)) /
                          (h * h * h);
        worst = std::max(worst, std::fabs(d3));
      }
      // |f'''| <= 90/rho^2 for the blends; allow slack for the difference op
      CHECK(worst <= 100.0 / (rho * rho));
    }
  }
  SUBCASE("derivative of the smoothing is consistent") {
    for (const LossKind& loss : {LossKind::absolute(), LossKind::huber(1.0)}) {
      for (double r = -2.0; r <= 2.0; r += 0.01) {
        const double h = 1e-7;
        const double fd = (smoothed_loss(loss, 0.3, r + h) -
                           smoothed_loss(loss, 0.3, r - h)) /
                          (2.0 * h);
        CHECK(smoothed_loss_derivative(loss, 0.3, r) ==
              doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }
  CHECK_THROWS_AS(smoothed_loss(LossKind::absolute(), 1.5, 0.0),
                  ValidationError);
}

TEST_CASE("all losses are midpoint convex") {
  Rng rng(31337);
  for (const LossKind& loss : kAll) {
    for (int t = 0; t < 10000; ++t) {
      const double a = 10.0 * rng.normal();
      const double b = 10.0 * rng.normal();
      const double mid = loss_value(loss, 0.5 * (a + b));
      CHECK(mid <=
            0.5 * loss_value(loss, a) + 0.5 * loss_value(loss, b) + 1e-12);
    }
  }
  // smoothed variants as well
  Rng rng2(31338);
  for (const LossKind& loss : {LossKind::absolute(), LossKind::huber(1.0)}) {
    for (int t = 0; t < 3000; ++t) {
      const double a = 3.0 * rng2.normal();
      const double b = 3.0 * rng2.normal();
      const double mid = smoothed_loss(loss, 0.25, 0.5 * (a + b));
      CHECK(mid <= 0.5 * smoothed_loss(loss, 0.25, a) +
                       0.5 * smoothed_loss(loss, 0.25, b) + 1e-12);
    }
  }
}

TEST_CASE("loss profiles carry the published exponents") {
  const LossProfile squared = loss_profile(LossKind::squared());
  CHECK(squared.q0 == 2.0);
  CHECK(squared.q_bold == doctest::Approx(1.5));
  CHECK(squared.qbar0 == 4);
  CHECK_FALSE(squared.qbar0_mismatch);
  CHECK(squared.m_ell.coeff == 0.0);

  const LossProfile absolute = loss_profile(LossKind::absolute());
  CHECK(absolute.q0 == 1.0);
  CHECK(absolute.q_bold == 0.0);
  CHECK(absolute.qbar0 == 0);
  CHECK_FALSE(absolute.qbar0_mismatch);
  CHECK(absolute.d_ell.power == -2.0);

  const LossProfile huber = loss_profile(LossKind::huber(2.0));
  CHECK(huber.qbar0_catalog == 3);  // published value, kept verbatim
  CHECK(huber.qbar0 == 0);          // formula value, used in rate formulas
  CHECK(huber.qbar0_mismatch);

  CHECK(q_star(0) == doctest::Approx(4.0));
  CHECK(q_star(4) == doctest::Approx(16.0));
}
