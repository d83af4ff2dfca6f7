#pragma once

#include <random>
#include <vector>

#include "nilcone/nilcone.hpp"

namespace nctest {

using nilcone::Rational;
using nilcone::RationalMatrix;
using nilcone::RationalVector;

inline Rational rand_q(std::mt19937_64& rng, long num = 12, long den = 5)
{
  std::uniform_int_distribution<long> n(-num, num), d(1, den);
  Rational q(n(rng), d(rng));
  q.canonicalize();
  return q;
}

inline RationalVector rand_vec(std::mt19937_64& rng, std::size_t m, long num = 12, long den = 5)
{
  RationalVector v(m);
  for (auto& x : v)
    x = rand_q(rng, num, den);
  return v;
}

inline nilcone::GroupPoint<Rational> rand_point(const nilcone::NilpotentGroup& G, std::mt19937_64& rng,
                                                nilcone::Law law = nilcone::Law::original)
{
  return G.point(rand_vec(rng, G.dim()), law);
}

// ---- unitriangular matrix model ------------------------------------------

inline RationalMatrix zero_mat(std::size_t n) { return RationalMatrix(n, RationalVector(n, Rational(0))); }

inline RationalMatrix mat_add(RationalMatrix a, const RationalMatrix& b, const Rational& s = 1)
{
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      a[i][j] += s * b[i][j];
  return a;
}

/// exp of a strictly upper triangular matrix, finite series.
inline RationalMatrix mat_exp(const RationalMatrix& N)
{
  const std::size_t n = N.size();
  RationalMatrix out = nilcone::identity_matrix(n), term = nilcone::identity_matrix(n);
  for (std::size_t k = 1; k < n; ++k) {
    term = nilcone::multiply(term, N); // N^k / (k-1)!
    out = mat_add(out, term, Rational(1) / Rational(static_cast<long>(k)));
    for (auto& row : term)
      for (auto& x : row)
        x /= static_cast<long>(k);
  }
  return out;
}

/// log of a unitriangular matrix, finite series.
inline RationalMatrix mat_log(const RationalMatrix& U)
{
  const std::size_t n = U.size();
  RationalMatrix M = mat_add(U, nilcone::identity_matrix(n), Rational(-1));
  RationalMatrix out = zero_mat(n), p = nilcone::identity_matrix(n);
  for (std::size_t k = 1; k < n; ++k) {
    p = nilcone::multiply(p, M);
    out = mat_add(out, p, Rational(k % 2 == 1 ? 1 : -1) / Rational(static_cast<long>(k)));
  }
  return out;
}

/// Faithful matrix realisation of a group: X_i -> basis[i].
struct MatrixModel {
  std::vector<RationalMatrix> basis;

  RationalMatrix embed(const RationalVector& v) const
  {
    RationalMatrix out = zero_mat(basis.front().size());
    for (std::size_t i = 0; i < v.size(); ++i)
      out = mat_add(out, basis[i], v[i]);
    return out;
  }

  /// Coordinates of a matrix in span(basis); the basis matrices have disjoint
  /// "leading" entries, so solve through the generic linear solver.
  RationalVector coords(const RationalMatrix& A) const
  {
    RationalMatrix cols;
    for (const auto& b : basis) {
      RationalVector flat;
      for (const auto& row : b)
        flat.insert(flat.end(), row.begin(), row.end());
      cols.push_back(flat);
    }
    RationalVector flat;
    for (const auto& row : A)
      flat.insert(flat.end(), row.begin(), row.end());
    auto c = nilcone::coordinates_in(cols, flat);
    if (!c)
      throw std::runtime_error("matrix outside the model's Lie algebra");
    return *c;
  }

  RationalVector product(const RationalVector& a, const RationalVector& b) const
  {
    return coords(mat_log(nilcone::multiply(mat_exp(embed(a)), mat_exp(embed(b)))));
  }
};

inline RationalMatrix elementary(std::size_t n, std::size_t i, std::size_t j)
{
  auto m = zero_mat(n);
  m[i - 1][j - 1] = 1;
  return m;
}

inline MatrixModel heisenberg_model()
{
  return {{elementary(3, 1, 2), elementary(3, 2, 3), elementary(3, 1, 3)}};
}

inline MatrixModel engel_model()
{
  return {{mat_add(elementary(4, 1, 2), elementary(4, 2, 3)), elementary(4, 3, 4), elementary(4, 2, 4),
           elementary(4, 1, 4)}};
}

// ---- brute-force lower central series -------------------------------------

/// Dimensions of g^1, g^2, ... by spanning all iterated brackets of basis
/// vectors, without row reduction of the series itself.
inline std::vector<std::size_t> brute_series_dims(const nilcone::NilpotentAlgebraSpec& spec, std::size_t max_len = 8)
{
  const std::size_t m = spec.dim;
  std::vector<std::size_t> dims{m};
  std::vector<RationalVector> level;
  for (std::size_t i = 0; i < m; ++i)
    level.push_back(nilcone::unit_vector(m, i));
  for (std::size_t len = 2; len <= max_len; ++len) {
    std::vector<RationalVector> next;
    for (std::size_t i = 0; i < m; ++i)
      for (const auto& w : level) {
        auto b = nilcone::bracket(spec.constants, nilcone::unit_vector(m, i), w);
        if (!nilcone::is_zero(b))
          next.push_back(b);
      }
    const std::size_t d = next.empty() ? 0 : nilcone::rank(next, m);
    dims.push_back(d);
    if (d == 0)
      break;
    level = std::move(next);
  }
  return dims;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

} // namespace nctest
