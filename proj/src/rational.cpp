#include "ivbounds/rational.hpp"

#include <cmath>

#include "ivbounds/core.hpp"

namespace ivbounds {

Rational to_rational(double v) {
  if (!std::isfinite(v)) throw Error(ErrorKind::DomainError, "cannot convert a non-finite double to a rational");
  // mpq_set_d is exact.
  return Rational(v);
}

std::string to_string(const Rational& q) { return q.str(); }

}  // namespace ivbounds
