#pragma once

// Exact rational scalars and small helpers shared by the whole library.

#include <gmpxx.h>

#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>

namespace airyfem {

using Rational = mpq_class;
using Integer = mpz_class;

inline Integer factorial(unsigned n)
{
  Integer out;
  mpz_fac_ui(out.get_mpz_t(), n);
  return out;
}

/// p / q in lowest terms. mpq_class(p, q) alone does not reduce.
inline Rational ratio(long p, long q)
{
  Rational out(p, q);
  out.canonicalize();
  return out;
}

inline double to_double(const Rational& q) { return q.get_d(); }

inline std::string to_string(const Rational& q) { return q.get_str(); }

/// Parses "p/q", an integer, or a decimal literal such as "-1.25e-3" exactly.
inline Rational parse_rational(std::string_view text)
{
  auto fail = [&]() -> Rational {
    throw std::invalid_argument("not a rational number: '" + std::string(text) + "'");
  };
  if (text.empty()) return fail();

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Integer num, den;
    if (num.set_str(std::string(text.substr(0, slash)), 10) != 0) return fail();
    if (den.set_str(std::string(text.substr(slash + 1)), 10) != 0) return fail();
    if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    Rational out(num, den);
    out.canonicalize();
    return out;
  }

  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') negative = text[pos++] == '-';
  std::string digits;
  long scale = 0;
  bool seen_digit = false;
  bool seen_point = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) --scale;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) return fail();
  if (pos < text.size()) {
    if (text[pos] != 'e' && text[pos] != 'E') return fail();
    ++pos;
    std::string exponent(text.substr(pos));
    if (exponent.empty()) return fail();
    std::size_t used = 0;
    long e = 0;
    try {
      e = std::stol(exponent, &used);
    } catch (const std::exception&) {
      return fail();
    }
    if (used != exponent.size()) return fail();
    scale += e;
  }

  Integer mantissa(digits, 10);
  Integer ten_pow;
  mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
  Rational out = scale < 0 ? Rational(mantissa, ten_pow) : Rational(mantissa * ten_pow);
  out.canonicalize();
  return negative ? Rational(-out) : out;
}

}  // namespace airyfem
