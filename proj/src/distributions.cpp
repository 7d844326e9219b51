#include "blockdep/distributions.hpp"

#include <cmath>

#include "blockdep/errors.hpp"

namespace blockdep {

double NoiseSpec::draw(Rng& rng) const {
  switch (kind) {
    case Kind::gaussian:
      return sigma2 == 0.0 ? 0.0 : std::sqrt(sigma2) * rng.normal();
    case Kind::student_t:
      return rng.student_t(nu);
    case Kind::two_point:
      return rng.rademacher() * a;
  }
  return 0.0;
}

double NoiseSpec::second_moment() const {
  switch (kind) {
    case Kind::gaussian:
      return sigma2;
    case Kind::student_t:
      return nu / (nu - 2.0);
    case Kind::two_point:
      return a * a;
  }
  return 0.0;
}

std::string NoiseSpec::name() const {
  switch (kind) {
    case Kind::gaussian:
      return "gaussian";
    case Kind::student_t:
      return "student_t";
    case Kind::two_point:
      return "two_point";
  }
  return "?";
}

void NoiseSpec::check() const {
  switch (kind) {
    case Kind::gaussian:
      if (sigma2 < 0.0) throw ValidationError("noise: sigma2 must be >= 0");
      return;
    case Kind::student_t:
      if (!(nu > 2.0)) throw ValidationError("noise: student_t needs nu > 2");
      return;
    case Kind::two_point:
      if (a < 0.0) throw ValidationError("noise: two_point needs a >= 0");
      return;
  }
}

std::vector<double> Theta0Spec::draw(std::size_t p, Rng& rng) const {
  std::vector<double> theta(p);
  switch (kind) {
    case Kind::explicit_vec:
      if (values.size() != p)
        throw ValidationError("theta0: explicit vector has wrong length");
      return values;
    case Kind::gaussian: {
      const double s = std::sqrt(sigma2);
      for (auto& v : theta) v = s * rng.normal();
      return theta;
    }
    case Kind::two_point:
      for (auto& v : theta) v = rng.rademacher() * a;
      return theta;
  }
  return theta;
}

double Theta0Spec::second_moment(std::size_t p) const {
  switch (kind) {
    case Kind::explicit_vec: {
      if (values.empty()) return 0.0;
      double s = 0.0;
      for (double v : values) s += v * v;
      return s / static_cast<double>(values.size());
    }
    case Kind::gaussian:
      return sigma2;
    case Kind::two_point:
      return a * a;
  }
  (void)p;
  return 0.0;
}

std::string Theta0Spec::name() const {
  switch (kind) {
    case Kind::explicit_vec:
      return "explicit";
    case Kind::gaussian:
      return "gaussian";
    case Kind::two_point:
      return "two_point";
  }
  return "?";
}

}  // namespace blockdep
