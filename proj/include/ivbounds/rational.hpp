#pragma once

#include <string>

#include <boost/multiprecision/gmp.hpp>

namespace ivbounds {

using Rational = boost::multiprecision::mpq_rational;

/// Exact value of a finite double (every double is a dyadic rational).
Rational to_rational(double v);

std::string to_string(const Rational& q);

}  // namespace ivbounds
