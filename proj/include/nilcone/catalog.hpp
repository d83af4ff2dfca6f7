#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "nilcone/bch.hpp"
#include "nilcone/lattice.hpp"

namespace nilcone::catalog {

namespace detail {

struct BracketDef {
  std::size_t i, j; // 1-based
  std::vector<std::pair<std::size_t, Rational>> coeffs;
};

inline NilpotentAlgebraSpec build(std::string name, std::size_t dim, const std::vector<BracketDef>& defs)
{
  NilpotentAlgebraSpec spec{std::move(name), dim, StructureTensor(dim)};
  for (const auto& d : defs) {
    RationalVector v = zero_vector(dim);
    for (const auto& [k, c] : d.coeffs)
      v[k - 1] = c;
    spec.constants.set_bracket(d.i - 1, d.j - 1, v);
  }
  return spec;
}

} // namespace detail

/// Structure constants of the shipped algebras, in the basis they are
/// presented in (adaptation happens in NilpotentGroup).
inline NilpotentAlgebraSpec algebra_spec(const std::string& name)
{
  using detail::build;
  const Rational one(1), two(2);
  if (name == "heisenberg3")
    return build(name, 3, {{1, 2, {{3, one}}}});
  if (name == "heisenberg5")
    return build(name, 5, {{1, 2, {{5, one}}}, {3, 4, {{5, one}}}});
  if (name == "engel4")
    return build(name, 4, {{1, 2, {{3, one}}}, {1, 3, {{4, one}}}});
  if (name == "free_nilpotent_2_3")
    // X3 = [X1,X2], [X1,X3] = 2 X4, [X2,X3] = 2 X5: scaled Hall basis with an integral lattice
    return build(name, 5, {{1, 2, {{3, one}}}, {1, 3, {{4, two}}}, {2, 3, {{5, two}}}});
  if (name == "engel4_sheared")
    // Engel in the basis X2' = X2 + X3: [X1,X2'] = X3 + X4, not graded
    return build(name, 4, {{1, 2, {{3, one}, {4, one}}}, {1, 3, {{4, one}}}});
  if (name == "heisenberg3_sheared")
    // X1' = X1 + X3
    return build(name, 3, {{1, 2, {{3, one}}}});
  if (name == "abelian2")
    return build(name, 2, {});
  if (name == "abelian3")
    return build(name, 3, {});
  throw std::invalid_argument("unknown built-in algebra: " + name);
}

inline const std::vector<std::string>& algebra_names()
{
  static const std::vector<std::string> names{"heisenberg3",    "heisenberg5",         "engel4",   "free_nilpotent_2_3",
                                              "engel4_sheared", "heisenberg3_sheared", "abelian2", "abelian3"};
  return names;
}

/// The four nilpotent groups every exact suite runs over.
inline const std::vector<std::string>& core_group_names()
{
  static const std::vector<std::string> names{"heisenberg3", "heisenberg5", "engel4", "free_nilpotent_2_3"};
  return names;
}

/// Shared, immutable group instance for a built-in name.
inline const NilpotentGroup& group(const std::string& name)
{
  static std::mutex mu;
  static std::map<std::string, GroupHandle> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(name);
  if (it == cache.end())
    it = cache.emplace(name, make_group(algebra_spec(name))).first;
  return *it->second;
}

inline std::vector<std::int64_t> default_divisors(const std::string& name)
{
  if (name == "engel4")
    return {1, 2, 1, 1};
  return std::vector<std::int64_t>(group(name).dim(), 1);
}

/// Built-in lattice with the standard generating set.
inline const Lattice& lattice(const std::string& name)
{
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<Lattice>> cache;
  const NilpotentGroup& g = group(name);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(name);
  if (it == cache.end()) {
    auto spec = Lattice::standard_spec(g, default_divisors(name), name + "_lattice");
    it = cache.emplace(name, std::make_unique<Lattice>(g, std::move(spec))).first;
  }
  return *it->second;
}

} // namespace nilcone::catalog
