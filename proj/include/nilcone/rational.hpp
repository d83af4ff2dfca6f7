#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace nilcone {

using Rational = mpq_class;

/// Parses "p", "p/q" or "-p/q" into a canonical rational.
inline Rational parse_rational(std::string_view text)
{
  std::string s(text);
  if (s.empty())
    throw std::invalid_argument("empty rational literal");
  Rational q;
  if (q.set_str(s, 10) != 0)
    throw std::invalid_argument("malformed rational literal: " + s);
  if (q.get_den() == 0)
    throw std::invalid_argument("zero denominator: " + s);
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline Rational make_rational(long num, long den = 1)
{
  Rational q(num, den);
  q.canonicalize();
  return q;
}

/// Uniform access to the two scalar fields used throughout: exact rationals
/// and doubles.
template <typename T> struct ScalarTraits;

template <> struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static Rational from_rational(const Rational& q) { return q; }
  static Rational from_int(std::int64_t v) { return Rational(static_cast<long>(v)); }
  static double to_double(const Rational& q) { return q.get_d(); }
  static Rational abs(const Rational& q) { return ::abs(q); }

  static std::int64_t floor_int(const Rational& q)
  {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    if (!f.fits_slong_p())
      throw std::overflow_error("rational floor out of int64 range");
    return f.get_si();
  }

  // nearest integer, ties to even
  static std::int64_t round_int(const Rational& q)
  {
    std::int64_t f = floor_int(q);
    Rational frac = q - Rational(static_cast<long>(f));
    if (frac > Rational(1, 2))
      return f + 1;
    if (frac < Rational(1, 2))
      return f;
    return (f % 2 == 0) ? f : f + 1;
  }

  static bool is_integer(const Rational& q) { return q.get_den() == 1; }
};

template <> struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static double from_rational(const Rational& q) { return q.get_d(); }
  static double from_int(std::int64_t v) { return static_cast<double>(v); }
  static double to_double(double v) { return v; }
  static double abs(double v) { return std::fabs(v); }
  static std::int64_t floor_int(double v) { return static_cast<std::int64_t>(std::floor(v)); }
  static std::int64_t round_int(double v) { return static_cast<std::int64_t>(std::nearbyint(v)); }
  static bool is_integer(double v) { return std::fabs(v - std::nearbyint(v)) < 1e-7; }
};

template <typename T>
concept Scalar = requires { ScalarTraits<T>::exact; };

} // namespace nilcone
