#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <type_traits>

#include "nilcone/bch.hpp"

namespace nilcone {

namespace detail {
template <typename T> T int_pow(const T& t, int e)
{
  T r(1);
  for (int i = 0; i < e; ++i)
    r *= t;
  return r;
}
} // namespace detail

/// delta_t: coordinate i scaled by t^{d_i}.
template <typename T> GroupPoint<T> dilation(GroupPoint<T> g, const T& t)
{
  if (!(t > 0))
    throw std::domain_error("dilation: t must be positive");
  const auto& deg = g.group->degrees();
  for (std::size_t i = 0; i < g.coords.size(); ++i)
    if (g.coords[i] != 0) {
      g.coords[i] *= detail::int_pow(t, deg[i]);
      if constexpr (std::is_same_v<T, Rational>)
        g.coords[i].canonicalize();
    }
  return g;
}

/// scl_t(gamma) = delta_{1/t}(gamma) read in G_infinity.
template <typename T> GroupPoint<T> scl(GroupPoint<T> gamma, const T& t)
{
  if (!(t > 0))
    throw std::domain_error("scl: t must be positive");
  gamma.law = Law::graded;
  return dilation(std::move(gamma), T(T(1) / t));
}

template <typename T> GroupPoint<T> pi_ab(GroupPoint<T> g)
{
  const auto& deg = g.group->degrees();
  for (std::size_t i = 0; i < g.coords.size(); ++i)
    if (deg[i] != 1)
      g.coords[i] = T(0);
  return g;
}

template <typename T> GroupPoint<T> pi_com(GroupPoint<T> g)
{
  const auto& deg = g.group->degrees();
  for (std::size_t i = 0; i < g.coords.size(); ++i)
    if (deg[i] == 1)
      g.coords[i] = T(0);
  return g;
}

/// |g|_m = max_i |x_i|^{1/d_i}
template <typename T> double quasi_norm_m(const GroupPoint<T>& g)
{
  const auto& deg = g.group->degrees();
  double out = 0.0;
  for (std::size_t i = 0; i < g.coords.size(); ++i) {
    double x = std::fabs(ScalarTraits<T>::to_double(g.coords[i]));
    if (x == 0.0)
      continue;
    out = std::max(out, deg[i] == 1 ? x : std::pow(x, 1.0 / deg[i]));
  }
  return out;
}

inline int degree_lcm(const NilpotentGroup& g)
{
  int l = 1;
  for (int d : g.degrees())
    l = std::lcm(l, d);
  return l;
}

/// |g|_m raised to the lcm D of the degrees: max_i |x_i|^{D/d_i}. Exact for
/// rational coordinates, which makes homogeneity checkable without roots.
inline Rational quasi_norm_m_power(const GroupPoint<Rational>& g)
{
  const int D = degree_lcm(*g.group);
  const auto& deg = g.group->degrees();
  Rational out(0);
  for (std::size_t i = 0; i < g.coords.size(); ++i) {
    Rational v = detail::int_pow(Rational(abs(g.coords[i])), D / deg[i]);
    if (v > out)
      out = v;
  }
  return out;
}

/// Proxy for d_infinity(g, h): |g^{-1} * h|_m in the graded law.
template <typename T> double proxy_distance(const GroupPoint<T>& g, const GroupPoint<T>& h)
{
  auto a = with_law(g, Law::graded);
  auto b = with_law(h, Law::graded);
  return quasi_norm_m(inverse(a) * b);
}

} // namespace nilcone
