#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nilcone/rational.hpp"

namespace nilcone {

using RationalVector = std::vector<Rational>;
using RationalMatrix = std::vector<RationalVector>; // row-major, rows are vectors

inline RationalVector zero_vector(std::size_t n) { return RationalVector(n, Rational(0)); }

inline RationalVector unit_vector(std::size_t n, std::size_t i)
{
  RationalVector v = zero_vector(n);
  v[i] = 1;
  return v;
}

inline bool is_zero(const RationalVector& v)
{
  for (const auto& x : v)
    if (x != 0)
      return false;
  return true;
}

inline RationalMatrix identity_matrix(std::size_t n)
{
  RationalMatrix m(n, zero_vector(n));
  for (std::size_t i = 0; i < n; ++i)
    m[i][i] = 1;
  return m;
}

struct RowEchelon {
  RationalMatrix rows;             // nonzero rows of the reduced row echelon form
  std::vector<std::size_t> pivots; // pivot column of each row, strictly increasing
};

/// Reduced row echelon form. Pivots are taken leftmost-first so the result
/// depends only on the row space.
inline RowEchelon rref(RationalMatrix rows, std::size_t ncols)
{
  RowEchelon out;
  std::size_t r = 0;
  for (std::size_t c = 0; c < ncols && r < rows.size(); ++c) {
    std::size_t p = r;
    while (p < rows.size() && rows[p][c] == 0)
      ++p;
    if (p == rows.size())
      continue;
    std::swap(rows[r], rows[p]);
    Rational inv = 1 / rows[r][c];
    for (auto& x : rows[r])
      x *= inv;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0)
        continue;
      Rational f = rows[i][c];
      for (std::size_t j = c; j < ncols; ++j)
        rows[i][j] -= f * rows[r][j];
    }
    out.pivots.push_back(c);
    ++r;
  }
  rows.resize(r);
  out.rows = std::move(rows);
  return out;
}

inline std::size_t rank(const RationalMatrix& rows, std::size_t ncols) { return rref(rows, ncols).pivots.size(); }

inline RationalMatrix inverse(const RationalMatrix& m)
{
  const std::size_t n = m.size();
  RationalMatrix aug(n, zero_vector(2 * n));
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i].size() != n)
      throw std::invalid_argument("inverse: matrix is not square");
    for (std::size_t j = 0; j < n; ++j)
      aug[i][j] = m[i][j];
    aug[i][n + i] = 1;
  }
  auto e = rref(std::move(aug), 2 * n);
  if (e.pivots.size() != n || e.pivots.back() != n - 1)
    throw std::domain_error("inverse: matrix is singular");
  RationalMatrix inv(n, zero_vector(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      inv[i][j] = e.rows[i][n + j];
  return inv;
}

inline RationalMatrix multiply(const RationalMatrix& a, const RationalMatrix& b)
{
  const std::size_t n = a.size(), k = b.size(), p = b.empty() ? 0 : b[0].size();
  RationalMatrix c(n, zero_vector(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      if (a[i][l] == 0)
        continue;
      for (std::size_t j = 0; j < p; ++j)
        c[i][j] += a[i][l] * b[l][j];
    }
  return c;
}

inline RationalMatrix transpose(const RationalMatrix& a)
{
  if (a.empty())
    return {};
  RationalMatrix t(a[0].size(), zero_vector(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      t[j][i] = a[i][j];
  return t;
}

/// Row vector times matrix.
inline RationalVector row_times(const RationalVector& v, const RationalMatrix& m)
{
  const std::size_t p = m.empty() ? 0 : m[0].size();
  RationalVector out = zero_vector(p);
  for (std::size_t l = 0; l < v.size(); ++l) {
    if (v[l] == 0)
      continue;
    for (std::size_t j = 0; j < p; ++j)
      out[j] += v[l] * m[l][j];
  }
  return out;
}

/// Coordinates of v in the basis given by `basis` rows, if v lies in their span.
inline std::optional<RationalVector> coordinates_in(const RationalMatrix& basis, const RationalVector& v)
{
  const std::size_t k = basis.size(), n = v.size();
  // columns: basis vectors, augmented by v
  RationalMatrix sys(n, zero_vector(k + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j)
      sys[i][j] = basis[j][i];
    sys[i][k] = v[i];
  }
  auto e = rref(std::move(sys), k + 1);
  RationalVector c = zero_vector(k);
  for (std::size_t r = 0; r < e.pivots.size(); ++r) {
    if (e.pivots[r] == k)
      return std::nullopt;
    c[e.pivots[r]] = e.rows[r][k];
  }
  if (e.pivots.size() != k)
    throw std::domain_error("coordinates_in: basis rows are dependent");
  return c;
}

} // namespace nilcone
