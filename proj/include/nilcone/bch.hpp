#pragma once

#include <algorithm>
#include <type_traits>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nilcone/algebra.hpp"
#include "nilcone/rational.hpp"

namespace nilcone {

inline constexpr std::size_t kMaxBchDepth = 6;

/// Truncated Baker-Campbell-Hausdorff series in Dynkin form:
///   log(e^X e^Y) = sum_w c_w [w_1,[w_2,[...,w_k]]]
/// over words w in {X,Y} of length <= depth. Words are stored as a suffix
/// tree so each right-nested bracket is one bracket away from its suffix.
class BchTable {
public:
  struct Node {
    int letter;        // 0 = X, 1 = Y
    int parent;        // node of the word with the first letter removed, -1 for single letters
    std::size_t length;
    Rational coeff;
    double coeff_d;
  };

  explicit BchTable(std::size_t depth) : depth_(depth)
  {
    if (depth == 0 || depth > kMaxBchDepth)
      throw std::invalid_argument("BCH depth must be in [1, " + std::to_string(kMaxBchDepth) + "]");
    build();
  }

  std::size_t depth() const { return depth_; }
  const std::vector<Node>& nodes() const { return nodes_; }

  /// Dynkin coefficient of a word (letters 0/1), before bracket evaluation.
  static Rational dynkin_coefficient(const std::vector<int>& w)
  {
    Rational total(0);
    const std::size_t k = w.size();
    // enumerate decompositions into blocks X^p Y^q with p+q >= 1
    std::vector<std::pair<int, int>> blocks;
    auto rec = [&](auto&& self, std::size_t pos) -> void {
      if (pos == k) {
        const long n = static_cast<long>(blocks.size());
        Rational term(n % 2 == 1 ? 1 : -1, n);
        Rational denom(static_cast<long>(k));
        for (auto [p, q] : blocks)
          denom *= factorial(p) * factorial(q);
        total += term / denom;
        return;
      }
      int p = 0;
      std::size_t i = pos;
      while (i < k && w[i] == 0) {
        ++p;
        ++i;
        blocks.emplace_back(p, 0);
        self(self, i);
        blocks.pop_back();
      }
      int q = 0;
      while (i < k && w[i] == 1) {
        ++q;
        ++i;
        blocks.emplace_back(p, q);
        self(self, i);
        blocks.pop_back();
      }
    };
    rec(rec, 0);
    total.canonicalize();
    return total;
  }

private:
  static Rational factorial(int n)
  {
    Rational r(1);
    for (int i = 2; i <= n; ++i)
      r *= i;
    return r;
  }

  void build()
  {
    struct Raw {
      std::vector<int> word;
      Rational coeff;
      bool live = false;
    };
    // words grouped by length; index of word w = its position in level[len]
    std::vector<std::vector<Raw>> level(depth_ + 1);
    level[1] = {{{0}, Rational(1)}, {{1}, Rational(1)}};
    for (std::size_t len = 2; len <= depth_; ++len)
      for (const auto& suf : level[len - 1]) {
        if (suf.word.size() >= 2 && suf.word[suf.word.size() - 1] == suf.word[suf.word.size() - 2])
          continue; // [a,a] = 0 innermost
        for (int a = 0; a < 2; ++a) {
          std::vector<int> w{a};
          w.insert(w.end(), suf.word.begin(), suf.word.end());
          if (w.size() == 2 && w[0] == w[1])
            continue;
          Raw r{w, dynkin_coefficient(w)};
          level[len].push_back(std::move(r));
        }
      }
    // a node is live if it or an extension carries a nonzero coefficient
    auto suffix_of = [&](const std::vector<int>& w, std::size_t len) -> Raw* {
      std::vector<int> s(w.begin() + 1, w.end());
      for (auto& r : level[len - 1])
        if (r.word == s)
          return &r;
      return nullptr;
    };
    for (std::size_t len = depth_; len >= 1 && len <= depth_; --len)
      for (auto& r : level[len]) {
        r.live = r.live || r.coeff != 0;
        if (r.live && len > 1)
          if (Raw* s = suffix_of(r.word, len))
            s->live = true;
      }
    std::vector<std::vector<int>> index(depth_ + 1);
    for (std::size_t len = 1; len <= depth_; ++len) {
      index[len].assign(level[len].size(), -1);
      for (std::size_t t = 0; t < level[len].size(); ++t) {
        auto& r = level[len][t];
        if (!r.live)
          continue;
        int parent = -1;
        if (len > 1) {
          Raw* s = suffix_of(r.word, len);
          parent = index[len - 1][static_cast<std::size_t>(s - level[len - 1].data())];
        }
        index[len][t] = static_cast<int>(nodes_.size());
        nodes_.push_back({r.word[0], parent, len, r.coeff, r.coeff.get_d()});
      }
    }
  }

  std::size_t depth_;
  std::vector<Node> nodes_;
};

enum class Law { original, graded };

inline const char* to_string(Law l) { return l == Law::original ? "original" : "graded"; }

class NilpotentGroup;

/// Element exp(x_1 X_1 + ... + x_m X_m) of G (original law) or G_infinity
/// (graded law), in adapted logarithmic coordinates.
template <typename T> struct GroupPoint {
  const NilpotentGroup* group = nullptr;
  Law law = Law::original;
  std::vector<T> coords;

  std::size_t dim() const { return coords.size(); }
  bool operator==(const GroupPoint& o) const { return group == o.group && law == o.law && coords == o.coords; }
};

/// Simply connected nilpotent Lie group in adapted coordinates, with both the
/// original law and the graded law of its asymptotic cone.
class NilpotentGroup {
public:
  explicit NilpotentGroup(NilpotentAlgebraSpec spec)
      : spec_(std::move(spec)), gradation_(nilcone::gradation(spec_)), bch_(std::max<std::size_t>(gradation_.step, 1))
  {
    if (gradation_.step > kMaxBchDepth)
      throw AlgebraError("nilpotency step exceeds BCH depth cap");
    gradation_.adapted_constants.entries();
    gradation_.graded_constants.entries();
  }

  const std::string& name() const { return spec_.name; }
  const NilpotentAlgebraSpec& spec() const { return spec_; }
  const Gradation& gradation() const { return gradation_; }
  const BchTable& bch_table() const { return bch_; }
  std::size_t dim() const { return gradation_.dim(); }
  std::size_t step() const { return gradation_.step; }
  std::size_t abelian_dim() const { return gradation_.abelian_dim; }
  int degree(std::size_t i) const { return gradation_.degrees[i]; }
  const std::vector<int>& degrees() const { return gradation_.degrees; }

  const StructureTensor& constants(Law law) const
  {
    return law == Law::original ? gradation_.adapted_constants : gradation_.graded_constants;
  }

  template <typename T> GroupPoint<T> identity(Law law = Law::original) const
  {
    return {this, law, std::vector<T>(dim(), T(0))};
  }

  template <typename T> GroupPoint<T> point(std::vector<T> coords, Law law = Law::original) const
  {
    if (coords.size() != dim())
      throw std::invalid_argument("point for '" + name() + "' needs " + std::to_string(dim()) + " coordinates");
    return {this, law, std::move(coords)};
  }

  /// Unit vector e_i (0-based) as a point.
  template <typename T> GroupPoint<T> basis_point(std::size_t i, Law law = Law::original, T scale = T(1)) const
  {
    auto p = identity<T>(law);
    p.coords.at(i) = scale;
    return p;
  }

private:
  NilpotentAlgebraSpec spec_;
  Gradation gradation_;
  BchTable bch_;
};

using GroupHandle = std::shared_ptr<const NilpotentGroup>;

inline GroupHandle make_group(NilpotentAlgebraSpec spec) { return std::make_shared<const NilpotentGroup>(std::move(spec)); }

namespace detail {
template <typename T> void check_compatible(const GroupPoint<T>& a, const GroupPoint<T>& b)
{
  if (a.group == nullptr || a.group != b.group)
    throw std::invalid_argument("group points belong to different algebras");
  if (a.law != b.law)
    throw std::invalid_argument("group points carry different group laws");
}
} // namespace detail

/// BCH series in the given law; x, y are Lie algebra coordinates.
template <typename T>
std::vector<T> bch_series(const NilpotentGroup& g, Law law, const std::vector<T>& x, const std::vector<T>& y)
{
  const auto& c = g.constants(law);
  const auto& nodes = g.bch_table().nodes();
  const std::size_t m = g.dim();
  std::vector<std::vector<T>> vals(nodes.size());
  std::vector<T> z(m, T(0));
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const auto& nd = nodes[n];
    const auto& letter = nd.letter == 0 ? x : y;
    vals[n] = nd.parent < 0 ? letter : bracket(c, letter, vals[static_cast<std::size_t>(nd.parent)]);
    if (nd.coeff == 0)
      continue;
    for (std::size_t k = 0; k < m; ++k) {
      if (vals[n][k] == 0)
        continue;
      if constexpr (ScalarTraits<T>::exact)
        z[k] += nd.coeff * vals[n][k];
      else
        z[k] += nd.coeff_d * vals[n][k];
    }
  }
  return z;
}

template <typename T> GroupPoint<T> bch_product(const GroupPoint<T>& a, const GroupPoint<T>& b)
{
  detail::check_compatible(a, b);
  return {a.group, a.law, bch_series(*a.group, a.law, a.coords, b.coords)};
}

template <typename T> GroupPoint<T> operator*(const GroupPoint<T>& a, const GroupPoint<T>& b) { return bch_product(a, b); }

template <typename T> GroupPoint<T> inverse(GroupPoint<T> a)
{
  for (auto& x : a.coords)
    x = -x;
  return a;
}

/// a^n = exp(n log a).
template <typename T> GroupPoint<T> power(GroupPoint<T> a, std::int64_t n)
{
  const T s = ScalarTraits<T>::from_int(n);
  for (auto& x : a.coords)
    x *= s;
  return a;
}

/// a^{-1} b^{-1} a b
template <typename T> GroupPoint<T> commutator(const GroupPoint<T>& a, const GroupPoint<T>& b)
{
  return inverse(a) * inverse(b) * a * b;
}

template <typename T> GroupPoint<T> with_law(GroupPoint<T> a, Law law)
{
  a.law = law;
  return a;
}

template <typename To, typename From> GroupPoint<To> convert(const GroupPoint<From>& a)
{
  GroupPoint<To> out{a.group, a.law, {}};
  out.coords.reserve(a.coords.size());
  for (const auto& x : a.coords) {
    if constexpr (std::is_same_v<To, From>)
      out.coords.push_back(x);
    else if constexpr (std::is_same_v<To, double>)
      out.coords.push_back(ScalarTraits<From>::to_double(x));
    else
      out.coords.push_back(Rational(x));
  }
  return out;
}

} // namespace nilcone
