#pragma once

#include <cstdint>
#include <string>

#include <boost/rational.hpp>

namespace nnmass {

using Rational = boost::rational<std::int64_t>;

double to_double(const Rational& r);

// Canonical text form: "6" for integers, "1/2" otherwise.
std::string to_string(const Rational& r);

// Accepts "6", "-3", "1/2", "0.6", "2.5e-1". Decimal text is converted exactly.
Rational parse_rational(const std::string& text);

// Best rational approximation with denominator <= max_den (continued
// fractions). Used when a rational arrives as a binary floating-point value.
Rational rational_from_double(double x, std::int64_t max_den = 1000000);

// ceil(r * n) and floor(r * n) without floating point.
std::int64_t ceil_mul(const Rational& r, std::int64_t n);
std::int64_t floor_mul(const Rational& r, std::int64_t n);

}  // namespace nnmass
