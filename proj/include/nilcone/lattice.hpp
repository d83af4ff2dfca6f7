#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nilcone/bch.hpp"
#include "nilcone/geometry.hpp"

namespace nilcone {

using Digits = std::vector<std::int64_t>;

/// Lattice generated by the coordinate generators u_i = exp(eta_i X_i). Its
/// elements are exactly u_1^{k_1} ... u_m^{k_m} with integer digits k_i.
struct LatticeSpec {
  std::string name;
  std::vector<std::int64_t> divisors; // eta_i >= 1, one per coordinate
  std::vector<Digits> generators;     // finite symmetric generating set S, by digits
};

class LatticeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class Lattice {
public:
  Lattice(const NilpotentGroup& group, LatticeSpec spec) : group_(&group), spec_(std::move(spec))
  {
    const std::size_t m = group.dim();
    if (spec_.divisors.size() != m)
      throw LatticeError("lattice '" + spec_.name + "': need one divisor per coordinate");
    for (auto e : spec_.divisors)
      if (e < 1)
        throw LatticeError("lattice '" + spec_.name + "': divisors must be >= 1");
    for (std::size_t i = 0; i < m; ++i) {
      u_q_.push_back(group.basis_point<Rational>(i, Law::original, Rational(static_cast<long>(spec_.divisors[i]))));
      u_d_.push_back(convert<double>(u_q_.back()));
    }
    check_closure();
    for (const auto& s : spec_.generators) {
      if (s.size() != m)
        throw LatticeError("lattice '" + spec_.name + "': generator has wrong length");
      gen_q_.push_back(from_digits<Rational>(s));
      gen_d_.push_back(convert<double>(gen_q_.back()));
    }
    for (const auto& s : gen_q_) {
      auto inv = integer_digits(inverse(s));
      bool found = false;
      for (const auto& t : spec_.generators)
        found = found || t == inv;
      if (!found)
        throw LatticeError("lattice '" + spec_.name + "': generating set is not symmetric");
    }
  }

  /// Default generating set: the degree-one coordinate generators and inverses.
  static LatticeSpec standard_spec(const NilpotentGroup& g, std::vector<std::int64_t> divisors, std::string name)
  {
    LatticeSpec spec{std::move(name), std::move(divisors), {}};
    for (std::size_t i = 0; i < g.dim(); ++i) {
      if (g.degree(i) != 1)
        continue;
      for (std::int64_t sgn : {1, -1}) {
        Digits d(g.dim(), 0);
        d[i] = sgn;
        spec.generators.push_back(d);
      }
    }
    return spec;
  }

  const NilpotentGroup& group() const { return *group_; }
  const LatticeSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }
  std::size_t dim() const { return group_->dim(); }
  std::int64_t divisor(std::size_t i) const { return spec_.divisors[i]; }
  std::size_t num_generators() const { return gen_q_.size(); }

  template <typename T> const GroupPoint<T>& generator(std::size_t s) const
  {
    if constexpr (std::is_same_v<T, Rational>)
      return gen_q_.at(s);
    else
      return gen_d_.at(s);
  }

  template <typename T> const GroupPoint<T>& coordinate_generator(std::size_t i) const
  {
    if constexpr (std::is_same_v<T, Rational>)
      return u_q_.at(i);
    else
      return u_d_.at(i);
  }

  template <typename T> GroupPoint<T> coordinate_power(std::size_t i, std::int64_t k) const
  {
    auto p = group_->identity<T>();
    p.coords[i] = ScalarTraits<T>::from_int(k * spec_.divisors[i]);
    return p;
  }

  /// u_1^{k_1} ... u_m^{k_m}
  template <typename T> GroupPoint<T> from_digits(const Digits& k) const
  {
    if (k.size() != dim())
      throw LatticeError("digit vector has wrong length");
    auto g = coordinate_power<T>(0, k[0]);
    for (std::size_t i = 1; i < k.size(); ++i)
      if (k[i] != 0)
        g = g * coordinate_power<T>(i, k[i]);
    return g;
  }

  /// Real Mal'cev digits of g: g = u_1^{k_1} ... u_m^{k_m}. Peeling u_i off
  /// the left changes coordinate i additively and leaves coordinates < i alone.
  template <typename T> std::vector<T> digits(GroupPoint<T> g) const
  {
    check_group(g);
    g.law = Law::original;
    std::vector<T> k(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      k[i] = g.coords[i] / ScalarTraits<T>::from_int(spec_.divisors[i]);
      if (k[i] == 0)
        continue;
      auto u = group_->identity<T>();
      u.coords[i] = -g.coords[i];
      g = u * g;
    }
    return k;
  }

  template <typename T> Digits integer_digits(const GroupPoint<T>& g) const
  {
    auto k = digits(g);
    Digits out(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
      if (!ScalarTraits<T>::is_integer(k[i]))
        throw LatticeError("point is not in lattice '" + spec_.name + "'");
      out[i] = ScalarTraits<T>::round_int(k[i]);
    }
    return out;
  }

  bool contains(const GroupPoint<Rational>& g) const
  {
    for (const auto& k : digits(g))
      if (!ScalarTraits<Rational>::is_integer(k))
        return false;
    return true;
  }

  template <typename T> struct Reduction {
    Digits digits;               // of the lattice part
    GroupPoint<T> lattice_point; // gamma
    GroupPoint<T> remainder;     // y, with omega = gamma * y
  };

  /// Writes omega = gamma * y with y in the half-open box prod [0, eta_i)
  /// (floor convention on each coordinate).
  template <typename T> Reduction<T> reduce_left(const GroupPoint<T>& omega) const
  {
    return peel(omega, [](const T& v) { return ScalarTraits<T>::floor_int(v); });
  }

  /// Mal'cev digit rounding (nearest integer on each peeled coordinate, ties
  /// to even), then the closest of the 3^m neighbouring digit vectors in
  /// quasi-norm. Ties keep the earlier candidate, the rounded digits first.
  template <typename T> GroupPoint<T> round_to_lattice(const GroupPoint<T>& g) const
  {
    auto gamma = from_digits<T>(round_to_digits(g));
    gamma.law = g.law;
    return gamma;
  }

  template <typename T> Digits round_to_digits(const GroupPoint<T>& g) const
  {
    const Digits base = peel(g, [](const T& v) { return ScalarTraits<T>::round_int(v); }).digits;
    auto h = g;
    h.law = Law::original;
    const auto gap = [&](const Digits& k) { return quasi_norm_m(inverse(from_digits<T>(k)) * h); };
    Digits best = base;
    double best_d = gap(base);
    const std::size_t m = dim();
    std::size_t combos = 1;
    for (std::size_t i = 0; i < m; ++i)
      combos *= 3;
    Digits k(m);
    for (std::size_t c = 0; c < combos; ++c) {
      std::size_t r = c;
      for (std::size_t i = m; i-- > 0; r /= 3)
        k[i] = base[i] + static_cast<std::int64_t>(r % 3) - 1;
      if (k == base)
        continue;
      const double d = gap(k);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  }

  Digits multiply(const Digits& a, const Digits& b) const
  {
    return integer_digits(from_digits<Rational>(a) * from_digits<Rational>(b));
  }
  Digits inverse_digits(const Digits& a) const { return integer_digits(inverse(from_digits<Rational>(a))); }
  Digits power_digits(const Digits& a, std::int64_t n) const { return integer_digits(power(from_digits<Rational>(a), n)); }

  template <typename T> bool in_box(const GroupPoint<T>& y) const
  {
    for (std::size_t i = 0; i < dim(); ++i)
      if (y.coords[i] < 0 || !(y.coords[i] < ScalarTraits<T>::from_int(spec_.divisors[i])))
        return false;
    return true;
  }

  double covolume() const
  {
    double v = 1;
    for (auto e : spec_.divisors)
      v *= static_cast<double>(e);
    return v;
  }

private:
  template <typename T> void check_group(const GroupPoint<T>& g) const
  {
    if (g.group != group_)
      throw LatticeError("point does not belong to the lattice's group");
  }

  template <typename T, typename Pick> Reduction<T> peel(GroupPoint<T> h, Pick pick) const
  {
    check_group(h);
    const Law law = h.law;
    h.law = Law::original;
    Digits k(dim(), 0);
    for (std::size_t i = 0; i < dim(); ++i) {
      k[i] = pick(h.coords[i] / ScalarTraits<T>::from_int(spec_.divisors[i]));
      if (k[i] != 0)
        h = coordinate_power<T>(i, -k[i]) * h;
    }
    auto gamma = from_digits<T>(k);
    gamma.law = law;
    h.law = law;
    return {std::move(k), std::move(gamma), std::move(h)};
  }

  // u_j^{±1} u_i^{±1} must have integer digits for every pair; this is the
  // polycyclic presentation, so closure of the whole set follows.
  void check_closure() const
  {
    for (std::size_t i = 0; i < dim(); ++i)
      for (std::size_t j = 0; j < dim(); ++j)
        for (int a : {1, -1})
          for (int b : {1, -1}) {
            auto p = coordinate_power<Rational>(j, a) * coordinate_power<Rational>(i, b);
            if (!contains(p))
              throw LatticeError("lattice '" + spec_.name + "' is not closed: u_" + std::to_string(j + 1) +
                                 "^" + std::to_string(a) + " u_" + std::to_string(i + 1) + "^" +
                                 std::to_string(b) + " has fractional digits");
          }
  }

  const NilpotentGroup* group_;
  LatticeSpec spec_;
  std::vector<GroupPoint<Rational>> u_q_;
  std::vector<GroupPoint<double>> u_d_;
  std::vector<GroupPoint<Rational>> gen_q_;
  std::vector<GroupPoint<double>> gen_d_;
};

} // namespace nilcone
