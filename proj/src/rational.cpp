#include "nnmass/rational.hpp"

#include <cmath>
#include <cstdlib>

#include "nnmass/error.hpp"

namespace nnmass {

double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

namespace {

std::int64_t parse_int(const std::string& s, const std::string& whole) {
  if (s.empty()) throw Error("invalid rational '" + whole + "'");
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size() || s.size() > 18) throw Error("invalid rational '" + whole + "'");
  for (std::size_t j = i; j < s.size(); ++j) {
    if (s[j] < '0' || s[j] > '9') throw Error("invalid rational '" + whole + "'");
  }
  return std::strtoll(s.c_str(), nullptr, 10);
}

std::int64_t pow10(int n) {
  std::int64_t p = 1;
  for (int i = 0; i < n; ++i) p *= 10;
  return p;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    std::int64_t num = parse_int(text.substr(0, slash), text);
    std::int64_t den = parse_int(text.substr(slash + 1), text);
    if (den == 0) throw Error("zero denominator in '" + text + "'");
    return Rational(num, den);
  }
  // Decimal with optional exponent, converted exactly.
  std::string mant = text;
  int exponent = 0;
  auto epos = text.find_first_of("eE");
  if (epos != std::string::npos) {
    mant = text.substr(0, epos);
    exponent = static_cast<int>(parse_int(text.substr(epos + 1), text));
  }
  auto dot = mant.find('.');
  std::string digits = mant;
  if (dot != std::string::npos) {
    digits = mant.substr(0, dot) + mant.substr(dot + 1);
    exponent -= static_cast<int>(mant.size() - dot - 1);
  }
  if (digits == "-" || digits == "+" || digits.empty()) throw Error("invalid rational '" + text + "'");
  std::int64_t num = parse_int(digits, text);
  if (exponent > 15 || exponent < -15) throw Error("rational out of range '" + text + "'");
  if (exponent >= 0) return Rational(num * pow10(exponent), 1);
  return Rational(num, pow10(-exponent));
}

Rational rational_from_double(double x, std::int64_t max_den) {
  if (!std::isfinite(x)) throw Error("non-finite value cannot be a rational");
  // Stern-Brocot / continued fraction convergents.
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double v = x;
  for (int iter = 0; iter < 64; ++iter) {
    double a = std::floor(v);
    if (std::abs(a) > 9.0e15) break;
    auto ai = static_cast<std::int64_t>(a);
    std::int64_t p2 = ai * p1 + p0;
    std::int64_t q2 = ai * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double frac = v - a;
    if (std::abs(static_cast<double>(p1) / static_cast<double>(q1) - x) <= 1e-15 * std::max(1.0, std::abs(x)) ||
        frac < 1e-15) {
      break;
    }
    v = 1.0 / frac;
  }
  if (q1 == 0) throw Error("rational approximation failed");
  return Rational(p1, q1);
}

std::int64_t floor_mul(const Rational& r, std::int64_t n) {
  std::int64_t num = r.numerator() * n;
  std::int64_t den = r.denominator();
  std::int64_t q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

std::int64_t ceil_mul(const Rational& r, std::int64_t n) {
  std::int64_t num = r.numerator() * n;
  std::int64_t den = r.denominator();
  std::int64_t q = num / den;
  if ((num % den != 0) && ((num < 0) == (den < 0))) ++q;
  return q;
}

}  // namespace nnmass
