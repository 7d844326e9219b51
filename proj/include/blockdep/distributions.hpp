#pragma once

#include <string>
#include <vector>

#include "blockdep/rng.hpp"

namespace blockdep {

/// Noise law for xi. student_t is the raw t distribution (variance
/// nu/(nu-2)); two_point puts mass 1/2 on each of +a and -a; gaussian with
/// sigma2 = 0 degenerates to a point mass at 0.
struct NoiseSpec {
  enum class Kind { gaussian, student_t, two_point };
  Kind kind = Kind::gaussian;
  double sigma2 = 1.0;  // gaussian
  double nu = 0.0;      // student_t, > 2
  double a = 0.0;       // two_point

  static NoiseSpec gaussian(double sigma2) {
    return {Kind::gaussian, sigma2, 0.0, 0.0};
  }
  static NoiseSpec student_t(double nu) { return {Kind::student_t, 0.0, nu, 0.0}; }
  static NoiseSpec two_point(double a) { return {Kind::two_point, 0.0, 0.0, a}; }

  double draw(Rng& rng) const;
  double second_moment() const;
  std::string name() const;
  void check() const;  // throws ValidationError
};

/// Law of the true parameter coordinates.
struct Theta0Spec {
  enum class Kind { explicit_vec, gaussian, two_point };
  Kind kind = Kind::gaussian;
  std::vector<double> values;  // explicit_vec
  double sigma2 = 1.0;         // gaussian
  double a = 0.0;              // two_point (+-a)

  static Theta0Spec explicit_vec(std::vector<double> v) {
    Theta0Spec s;
    s.kind = Kind::explicit_vec;
    s.values = std::move(v);
    return s;
  }
  static Theta0Spec gaussian(double sigma2) {
    Theta0Spec s;
    s.kind = Kind::gaussian;
    s.sigma2 = sigma2;
    return s;
  }
  static Theta0Spec two_point(double a) {
    Theta0Spec s;
    s.kind = Kind::two_point;
    s.a = a;
    return s;
  }

  std::vector<double> draw(std::size_t p, Rng& rng) const;
  /// E[Pi0^2] for i.i.d. specs; for explicit vectors the empirical mean square.
  double second_moment(std::size_t p) const;
  std::string name() const;
};

}  // namespace blockdep
