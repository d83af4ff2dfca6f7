#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "nilcone/geometry.hpp"
#include "nilcone/linalg.hpp"

namespace nilcone {

/// One factor delta_a(s) of a horizontal factorization. Generator index 2i is
/// +e_i and 2i+1 is -e_i, for the degree-one coordinates i.
struct FactorTerm {
  std::size_t generator;
  double exponent; // a >= 0
};

struct Factorization {
  std::vector<FactorTerm> terms;
  double residual = 0; // max |coordinate| of reconstruction^{-1} * target
  int iterations = 0;
};

enum class FactorOrder { forward, reverse };

class FactorizationError : public std::runtime_error {
public:
  FactorizationError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

inline std::size_t num_horizontal_generators(const NilpotentGroup& G) { return 2 * G.abelian_dim(); }

/// +-e_i as a point of G_infinity, dilated by a.
inline GroupPoint<double> horizontal_generator(const NilpotentGroup& G, std::size_t index, double a = 1.0)
{
  if (index >= num_horizontal_generators(G))
    throw std::out_of_range("horizontal generator index out of range");
  return G.basis_point<double>(index / 2, Law::graded, index % 2 == 0 ? a : -a);
}

inline GroupPoint<double> reconstruct(const NilpotentGroup& G, const std::vector<FactorTerm>& terms)
{
  auto p = G.identity<double>(Law::graded);
  for (const auto& t : terms)
    p = p * horizontal_generator(G, t.generator, t.exponent);
  return p;
}

inline GroupPoint<double> reconstruct(const NilpotentGroup& G, const Factorization& f) { return reconstruct(G, f.terms); }

namespace detail {

/// Left-normed bracket tuples (i_1..i_k) of degree-one generators whose
/// brackets form a basis of V_k, with the inverse of their coordinate matrix.
struct GadgetBasis {
  std::vector<std::vector<std::size_t>> tuples;
  std::vector<std::size_t> coords; // indices of the degree-k coordinates
  std::vector<std::vector<double>> solve; // c = solve * z
};

inline GadgetBasis build_gadget_basis(const NilpotentGroup& G, int k)
{
  GadgetBasis out;
  for (std::size_t i = 0; i < G.dim(); ++i)
    if (G.degree(i) == k)
      out.coords.push_back(i);
  const std::size_t d = G.abelian_dim(), n = out.coords.size();
  if (n == 0)
    return out;
  const auto& c = G.constants(Law::graded);
  RationalMatrix rows;
  std::vector<std::size_t> tuple(static_cast<std::size_t>(k), 0);
  while (true) {
    RationalVector v = unit_vector(G.dim(), tuple.back());
    for (std::size_t p = tuple.size() - 1; p-- > 0;)
      v = bracket(c, unit_vector(G.dim(), tuple[p]), v);
    RationalVector proj(n);
    for (std::size_t j = 0; j < n; ++j)
      proj[j] = v[out.coords[j]];
    auto trial = rows;
    trial.push_back(proj);
    if (rank(trial, n) > rows.size()) {
      rows = std::move(trial);
      out.tuples.push_back(tuple);
      if (rows.size() == n)
        break;
    }
    std::size_t p = 0;
    while (p < tuple.size() && ++tuple[p] == d)
      tuple[p++] = 0;
    if (p == tuple.size())
      break;
  }
  if (rows.size() != n)
    throw AlgebraError("degree-" + std::to_string(k) + " layer is not generated by brackets of degree one");
  // rows[j] = coordinates of tuple j; z = sum_j c_j rows[j]  =>  c = z * rows^{-1}
  auto inv = transpose(inverse(rows));
  out.solve.assign(n, std::vector<double>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      out.solve[a][b] = inv[a][b].get_d();
  return out;
}

inline const GadgetBasis& gadget_basis(const NilpotentGroup& G, int k)
{
  static std::mutex mu;
  static std::map<std::pair<const NilpotentGroup*, int>, GadgetBasis> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({&G, k});
  if (it == cache.end())
    it = cache.emplace(std::make_pair(&G, k), build_gadget_basis(G, k)).first;
  return it->second;
}

inline std::vector<FactorTerm> inverse_word(std::vector<FactorTerm> w)
{
  std::reverse(w.begin(), w.end());
  for (auto& t : w)
    t.generator ^= 1;
  return w;
}

inline void append(std::vector<FactorTerm>& w, const std::vector<FactorTerm>& tail) { w.insert(w.end(), tail.begin(), tail.end()); }

/// Nested commutator K(e_{i1}, K(e_{i2}, ... e_{ik})) with K(A,B) = A B A^{-1} B^{-1},
/// every letter dilated by lambda. Leading term: lambda^k [e_{i1},[...,e_{ik}]].
/// negate swaps the outermost pair, which flips the sign of the leading term.
inline std::vector<FactorTerm> gadget(const std::vector<std::size_t>& tuple, std::size_t from, double lambda, bool negate)
{
  std::vector<FactorTerm> a{{2 * tuple[from], lambda}};
  if (from + 1 == tuple.size())
    return negate ? inverse_word(a) : a;
  auto b = gadget(tuple, from + 1, lambda, false);
  auto& first = negate ? b : a;
  auto& second = negate ? a : b;
  std::vector<FactorTerm> w = first;
  append(w, second);
  append(w, inverse_word(first));
  append(w, inverse_word(second));
  return w;
}

/// One degree-by-degree pass; exact in exact arithmetic.
inline std::vector<FactorTerm> factor_pass(const NilpotentGroup& G, const GroupPoint<double>& target, FactorOrder order)
{
  std::vector<FactorTerm> word;
  const std::size_t d = G.abelian_dim();
  for (std::size_t s = 0; s < d; ++s) {
    const std::size_t i = order == FactorOrder::forward ? s : d - 1 - s;
    const double x = target.coords[i];
    if (x != 0.0)
      word.push_back({2 * i + (x < 0 ? 1 : 0), std::fabs(x)});
  }
  for (int k = 2; k <= static_cast<int>(G.step()); ++k) {
    const auto& basis = gadget_basis(G, k);
    const auto r = inverse(reconstruct(G, word)) * target;
    const std::size_t n = basis.coords.size();
    std::vector<double> c(n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        c[a] += basis.solve[a][b] * r.coords[basis.coords[b]];
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t j = order == FactorOrder::forward ? s : n - 1 - s;
      if (c[j] == 0.0)
        continue;
      append(word, gadget(basis.tuples[j], 0, std::pow(std::fabs(c[j]), 1.0 / k), c[j] < 0));
    }
  }
  return word;
}

} // namespace detail

/// Writes g in G_infinity as delta_{a_1}s_1 * ... * delta_{a_k}s_k over the
/// degree-one coordinate generators and their inverses. Abelian part first,
/// then commutator gadgets degree by degree, then a residual correction loop.
inline Factorization horizontal_factorization(const GroupPoint<double>& g, FactorOrder order = FactorOrder::forward,
                                              double tol = 1e-9, int max_iter = 50)
{
  const NilpotentGroup& G = *g.group;
  const auto target = with_law(g, Law::graded);
  Factorization f;
  f.terms = detail::factor_pass(G, target, order);
  double scale = 1.0;
  for (double x : target.coords)
    scale = std::max(scale, std::fabs(x));
  for (f.iterations = 1;; ++f.iterations) {
    const auto r = inverse(reconstruct(G, f.terms)) * target;
    f.residual = 0;
    for (double x : r.coords)
      f.residual = std::max(f.residual, std::fabs(x));
    if (f.residual <= tol * scale)
      return f;
    if (f.iterations >= max_iter)
      throw FactorizationError("horizontal factorization did not converge", f.residual);
    detail::append(f.terms, detail::factor_pass(G, r, order));
  }
}

} // namespace nilcone
