#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nilcone/linalg.hpp"
#include "nilcone/rational.hpp"

namespace nilcone {

class AlgebraError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Rational tensor c[i][j][k] with [X_i, X_j] = sum_k c_{ij}^k X_k.
class StructureTensor {
public:
  struct Entry {
    std::size_t i, j, k;
    Rational c;
    double cd;
  };

  StructureTensor() = default;
  explicit StructureTensor(std::size_t dim) : dim_(dim), data_(dim * dim * dim, Rational(0)) {}

  std::size_t dim() const { return dim_; }
  std::size_t raw_size() const { return data_.size(); }

  const Rational& operator()(std::size_t i, std::size_t j, std::size_t k) const { return data_[index(i, j, k)]; }

  void set(std::size_t i, std::size_t j, std::size_t k, const Rational& v)
  {
    data_[index(i, j, k)] = v;
    entries_.clear();
  }

  /// Sets [X_i, X_j] = sum coeffs and [X_j, X_i] = -[X_i, X_j].
  void set_bracket(std::size_t i, std::size_t j, const RationalVector& coeffs)
  {
    for (std::size_t k = 0; k < dim_; ++k) {
      set(i, j, k, coeffs[k]);
      set(j, i, k, -coeffs[k]);
    }
  }

  const std::vector<Entry>& entries() const
  {
    if (entries_.empty() && !data_.empty()) {
      for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j)
          for (std::size_t k = 0; k < dim_; ++k) {
            const auto& c = (*this)(i, j, k);
            if (c != 0)
              entries_.push_back({i, j, k, c, c.get_d()});
          }
      if (entries_.empty())
        entries_.push_back({0, 0, 0, Rational(0), 0.0}); // sentinel: abelian
    }
    return entries_;
  }

  bool operator==(const StructureTensor& o) const { return dim_ == o.dim_ && data_ == o.data_; }

private:
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const
  {
    if (i >= dim_ || j >= dim_ || k >= dim_)
      throw AlgebraError("structure constant index out of range");
    return (i * dim_ + j) * dim_ + k;
  }

  std::size_t dim_ = 0;
  std::vector<Rational> data_;
  mutable std::vector<Entry> entries_;
};

/// [v, w] in coordinates.
template <typename T>
std::vector<T> bracket(const StructureTensor& c, const std::vector<T>& v, const std::vector<T>& w)
{
  std::vector<T> out(c.dim(), T(0));
  for (const auto& e : c.entries()) {
    if (v[e.i] == 0 || w[e.j] == 0)
      continue;
    if constexpr (ScalarTraits<T>::exact)
      out[e.k] += e.c * v[e.i] * w[e.j];
    else
      out[e.k] += e.cd * v[e.i] * w[e.j];
  }
  return out;
}

struct NilpotentAlgebraSpec {
  std::string name;
  std::size_t dim = 0;
  StructureTensor constants;
};

struct ValidationReport {
  using Triple = std::array<std::size_t, 3>; // 1-based indices

  std::vector<Triple> antisymmetry_violations;
  std::vector<Triple> jacobi_violations;
  std::optional<RationalMatrix> non_nilpotent_witness; // stabilized nonzero ideal
  std::size_t step = 0;                                // valid only if nilpotent

  bool valid() const
  {
    return antisymmetry_violations.empty() && jacobi_violations.empty() && !non_nilpotent_witness;
  }

  std::string summary() const
  {
    std::ostringstream os;
    if (valid()) {
      os << "valid, step " << step;
      return os.str();
    }
    for (const auto& t : antisymmetry_violations)
      os << "antisymmetry violated at (" << t[0] << "," << t[1] << "," << t[2] << ")\n";
    for (const auto& t : jacobi_violations)
      os << "Jacobi violated at (" << t[0] << "," << t[1] << "," << t[2] << ")\n";
    if (non_nilpotent_witness) {
      os << "not nilpotent: lower central series stabilizes at span{";
      for (std::size_t r = 0; r < non_nilpotent_witness->size(); ++r) {
        os << (r ? ", " : "") << "(";
        const auto& row = (*non_nilpotent_witness)[r];
        for (std::size_t j = 0; j < row.size(); ++j)
          os << (j ? "," : "") << row[j].get_str();
        os << ")";
      }
      os << "}\n";
    }
    return os.str();
  }
};

namespace detail {

inline void check_structure(const NilpotentAlgebraSpec& spec)
{
  if (spec.dim == 0)
    throw AlgebraError("algebra '" + spec.name + "': dim must be >= 1");
  if (spec.constants.dim() != spec.dim || spec.constants.raw_size() != spec.dim * spec.dim * spec.dim)
    throw AlgebraError("algebra '" + spec.name + "': structure tensor shape does not match dim");
}

/// Bases (rref rows) of g^1, g^2, ... until zero or stabilization.
/// Returns {bases, stabilized}.
inline std::pair<std::vector<RationalMatrix>, bool> central_series_bases(const NilpotentAlgebraSpec& spec)
{
  const std::size_t m = spec.dim;
  std::vector<RationalMatrix> out;
  out.push_back(identity_matrix(m));
  while (!out.back().empty()) {
    RationalMatrix gens;
    for (std::size_t a = 0; a < m; ++a) {
      RationalVector ea = unit_vector(m, a);
      for (const auto& v : out.back()) {
        auto b = bracket(spec.constants, ea, v);
        if (!is_zero(b))
          gens.push_back(std::move(b));
      }
    }
    auto next = rref(std::move(gens), m).rows;
    if (next.size() == out.back().size())
      return {out, true};
    out.push_back(std::move(next));
  }
  return {out, false};
}

} // namespace detail

inline ValidationReport validate_algebra(const NilpotentAlgebraSpec& spec)
{
  detail::check_structure(spec);
  const std::size_t m = spec.dim;
  const auto& c = spec.constants;
  ValidationReport rep;

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        if (c(i, j, k) != -c(j, i, k))
          rep.antisymmetry_violations.push_back({i + 1, j + 1, k + 1});

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      for (std::size_t l = j + 1; l < m; ++l) {
        auto ei = unit_vector(m, i), ej = unit_vector(m, j), el = unit_vector(m, l);
        auto s = bracket(c, ei, bracket(c, ej, el));
        auto t = bracket(c, ej, bracket(c, el, ei));
        auto u = bracket(c, el, bracket(c, ei, ej));
        for (std::size_t k = 0; k < m; ++k)
          if (s[k] + t[k] + u[k] != 0) {
            rep.jacobi_violations.push_back({i + 1, j + 1, l + 1});
            break;
          }
      }

  auto [bases, stabilized] = detail::central_series_bases(spec);
  if (stabilized)
    rep.non_nilpotent_witness = bases.back();
  else
    rep.step = bases.size() - 1;
  return rep;
}

struct LowerCentralSeries {
  std::size_t step = 0;
  std::vector<RationalMatrix> subspace_bases; // g^1 .. g^{r+1}, rref rows in input coordinates
  RationalMatrix adapted_basis_change;        // rows: adapted basis vectors in input coordinates
};

inline LowerCentralSeries lower_central_series(const NilpotentAlgebraSpec& spec)
{
  auto rep = validate_algebra(spec);
  if (!rep.valid())
    throw AlgebraError("algebra '" + spec.name + "' is invalid:\n" + rep.summary());

  const std::size_t m = spec.dim;
  LowerCentralSeries lcs;
  lcs.subspace_bases = detail::central_series_bases(spec).first;
  lcs.step = lcs.subspace_bases.size() - 1;

  // V_i = rows of rref(g^i) whose pivot is not a pivot of rref(g^{i+1})
  for (std::size_t i = 0; i < lcs.step; ++i) {
    auto cur = rref(lcs.subspace_bases[i], m);
    auto nxt = rref(lcs.subspace_bases[i + 1], m);
    for (std::size_t r = 0; r < cur.rows.size(); ++r) {
      bool shared = false;
      for (auto p : nxt.pivots)
        shared = shared || p == cur.pivots[r];
      if (!shared)
        lcs.adapted_basis_change.push_back(cur.rows[r]);
    }
  }
  return lcs;
}

struct Gradation {
  std::size_t step = 0;
  std::size_t abelian_dim = 0;
  std::vector<int> degrees;         // d_i, non-decreasing, d_1 = 1
  StructureTensor adapted_constants; // original bracket in the adapted basis
  StructureTensor graded_constants;  // homogeneous part: d_k = d_i + d_j
  RationalMatrix basis_change;       // adapted basis rows in input coordinates

  std::size_t dim() const { return degrees.size(); }
};

inline StructureTensor change_basis(const StructureTensor& c, const RationalMatrix& rows)
{
  const std::size_t m = c.dim();
  RationalMatrix inv = inverse(rows);
  StructureTensor out(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      auto b = row_times(bracket(c, rows[i], rows[j]), inv);
      for (std::size_t k = 0; k < m; ++k)
        out.set(i, j, k, b[k]);
    }
  return out;
}

inline Gradation gradation(const NilpotentAlgebraSpec& spec, const LowerCentralSeries& lcs)
{
  const std::size_t m = spec.dim;
  Gradation g;
  g.step = lcs.step;
  g.basis_change = lcs.adapted_basis_change;
  if (g.basis_change.size() != m)
    throw AlgebraError("adapted basis has wrong size");

  for (std::size_t i = 0; i < lcs.step; ++i) {
    std::size_t n_here = lcs.subspace_bases[i].size() - lcs.subspace_bases[i + 1].size();
    for (std::size_t r = 0; r < n_here; ++r)
      g.degrees.push_back(static_cast<int>(i + 1));
  }
  for (int d : g.degrees)
    g.abelian_dim += (d == 1);

  g.adapted_constants = change_basis(spec.constants, g.basis_change);
  g.graded_constants = StructureTensor(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        if (g.degrees[k] == g.degrees[i] + g.degrees[j])
          g.graded_constants.set(i, j, k, g.adapted_constants(i, j, k));
  return g;
}

inline Gradation gradation(const NilpotentAlgebraSpec& spec) { return gradation(spec, lower_central_series(spec)); }

namespace detail {
inline Rational rational_pow(const Rational& t, int e)
{
  Rational r(1);
  Rational b = e >= 0 ? t : Rational(1 / t);
  for (int i = 0; i < (e >= 0 ? e : -e); ++i)
    r *= b;
  return r;
}
} // namespace detail

/// [v,w]_t = delta_{1/t}([delta_t v, delta_t w]) for the original bracket.
inline RationalVector bracket_t(const Gradation& g, const RationalVector& v, const RationalVector& w, const Rational& t)
{
  if (t <= 0)
    throw std::domain_error("bracket_t: t must be positive");
  const std::size_t m = g.dim();
  RationalVector sv(m), sw(m);
  for (std::size_t i = 0; i < m; ++i) {
    Rational s = detail::rational_pow(t, g.degrees[i]);
    sv[i] = v[i] * s;
    sw[i] = w[i] * s;
  }
  auto b = bracket(g.adapted_constants, sv, sw);
  for (std::size_t k = 0; k < m; ++k)
    b[k] *= detail::rational_pow(t, -g.degrees[k]);
  return b;
}

inline RationalVector graded_bracket(const Gradation& g, const RationalVector& v, const RationalVector& w)
{
  return bracket(g.graded_constants, v, w);
}

} // namespace nilcone
