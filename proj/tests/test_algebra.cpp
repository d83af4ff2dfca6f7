#include <gtest/gtest.h>

#include "support.hpp"

using namespace nilcone;
using nctest::rand_vec;

namespace {

NilpotentAlgebraSpec from_brackets(std::size_t dim, std::vector<std::tuple<std::size_t, std::size_t, RationalVector>> b)
{
  NilpotentAlgebraSpec s{"test", dim, StructureTensor(dim)};
  for (auto& [i, j, v] : b)
    s.constants.set_bracket(i, j, v);
  return s;
}

RationalVector vec(std::initializer_list<long> xs)
{
  RationalVector v;
  for (long x : xs)
    v.emplace_back(x);
  return v;
}

} // namespace

TEST(Validate, HeisenbergIsStepTwo)
{
  auto rep = validate_algebra(catalog::algebra_spec("heisenberg3"));
  EXPECT_TRUE(rep.valid());
  EXPECT_EQ(rep.step, 2u);
}

TEST(Validate, NonNilpotentWitness)
{
  auto spec = from_brackets(2, {{0, 1, vec({0, 1})}});
  auto rep = validate_algebra(spec);
  EXPECT_FALSE(rep.valid());
  ASSERT_TRUE(rep.non_nilpotent_witness.has_value());
  ASSERT_EQ(rep.non_nilpotent_witness->size(), 1u);
  EXPECT_EQ(nilcone::rank({(*rep.non_nilpotent_witness)[0], vec({0, 1})}, 2), 1u);
  EXPECT_THROW(NilpotentGroup{spec}, AlgebraError);
}

TEST(Validate, AntisymmetryViolation)
{
  NilpotentAlgebraSpec s{"bad", 3, StructureTensor(3)};
  s.constants.set(0, 1, 2, Rational(1));
  s.constants.set(1, 0, 2, Rational(1));
  auto rep = validate_algebra(s);
  ASSERT_EQ(rep.antisymmetry_violations.size(), 1u);
  EXPECT_EQ(rep.antisymmetry_violations[0], (ValidationReport::Triple{1, 2, 3}));
}

TEST(Validate, JacobiViolationReported)
{
  // [X1,X2]=X2, [X1,X3]=X3, [X2,X3]=X1: the Jacobi sum on (1,2,3) is -2 X1
  auto s = from_brackets(3, {{0, 1, vec({0, 1, 0})}, {0, 2, vec({0, 0, 1})}, {1, 2, vec({1, 0, 0})}});
  auto rep = validate_algebra(s);
  EXPECT_FALSE(rep.jacobi_violations.empty());
}

TEST(Validate, MalformedTensorIsStructural)
{
  NilpotentAlgebraSpec s{"bad", 3, StructureTensor(2)};
  EXPECT_THROW(validate_algebra(s), AlgebraError);
}

TEST(Series, HeisenbergEngelAbelian)
{
  auto h = lower_central_series(catalog::algebra_spec("heisenberg3"));
  EXPECT_EQ(h.step, 2u);
  ASSERT_EQ(h.subspace_bases[1].size(), 1u);
  EXPECT_EQ(h.subspace_bases[1][0], vec({0, 0, 1}));

  auto e = lower_central_series(catalog::algebra_spec("engel4"));
  EXPECT_EQ(e.step, 3u);
  EXPECT_EQ(e.subspace_bases[1].size(), 2u);
  EXPECT_EQ(nilcone::rank(RationalMatrix{e.subspace_bases[1][0], e.subspace_bases[1][1], vec({0, 0, 1, 0}), vec({0, 0, 0, 1})}, 4),
            2u);
  ASSERT_EQ(e.subspace_bases[2].size(), 1u);
  EXPECT_EQ(e.subspace_bases[2][0], vec({0, 0, 0, 1}));

  auto a = lower_central_series(catalog::algebra_spec("abelian3"));
  EXPECT_EQ(a.step, 1u);
  EXPECT_TRUE(a.subspace_bases[1].empty());
}

TEST(Series, MatchesBruteForceSpans)
{
  for (const auto& name : catalog::algebra_names()) {
    const auto spec = catalog::algebra_spec(name);
    auto lcs = lower_central_series(spec);
    auto brute = nctest::brute_series_dims(spec);
    ASSERT_EQ(brute.size(), lcs.subspace_bases.size()) << name;
    for (std::size_t i = 0; i < brute.size(); ++i)
      EXPECT_EQ(brute[i], lcs.subspace_bases[i].size()) << name << " level " << i + 1;
  }
}

TEST(Gradation, DegreesAndGradedConstants)
{
  auto h = gradation(catalog::algebra_spec("heisenberg3"));
  EXPECT_EQ(h.degrees, (std::vector<int>{1, 1, 2}));
  EXPECT_EQ(h.graded_constants, h.adapted_constants);

  auto e = gradation(catalog::algebra_spec("engel4"));
  EXPECT_EQ(e.degrees, (std::vector<int>{1, 1, 2, 3}));
  EXPECT_EQ(e.graded_constants, e.adapted_constants);
  for (const auto& en : e.adapted_constants.entries())
    EXPECT_EQ(e.degrees[en.k], e.degrees[en.i] + e.degrees[en.j]);

  auto sh = gradation(catalog::algebra_spec("heisenberg3_sheared"));
  EXPECT_EQ(sh.degrees, (std::vector<int>{1, 1, 2}));
}

TEST(Gradation, ShearedEngelIsNotGraded)
{
  auto g = gradation(catalog::algebra_spec("engel4_sheared"));
  EXPECT_EQ(g.degrees, (std::vector<int>{1, 1, 2, 3}));
  EXPECT_NE(g.graded_constants, g.adapted_constants);
}

// Non-adapted presentation of Heisenberg: X1 = Y1 + Y3 in a basis where the
// centre is listed first. Re-derive degrees by brute force.
TEST(Gradation, AdaptsNonAdaptedBasis)
{
  // basis (Z, A, B) with [A,B] = Z
  auto s = from_brackets(3, {{1, 2, vec({1, 0, 0})}});
  auto g = gradation(s);
  EXPECT_EQ(g.degrees, (std::vector<int>{1, 1, 2}));
  // adapted basis rows must span the input space and end with the centre
  EXPECT_EQ(nilcone::rank(g.basis_change, 3), 3u);
  EXPECT_EQ(nilcone::rank({g.basis_change[2], vec({1, 0, 0})}, 3), 1u);
  auto out = graded_bracket(g, unit_vector(3, 0), unit_vector(3, 1));
  EXPECT_TRUE(!is_zero(out));
  EXPECT_EQ(out[0], 0);
  EXPECT_EQ(out[1], 0);
}

TEST(Bracket, Examples)
{
  auto h = gradation(catalog::algebra_spec("heisenberg3"));
  EXPECT_EQ(graded_bracket(h, unit_vector(3, 0), unit_vector(3, 1)), unit_vector(3, 2));
  auto e = gradation(catalog::algebra_spec("engel4"));
  EXPECT_EQ(graded_bracket(e, unit_vector(4, 0), unit_vector(4, 2)), unit_vector(4, 3));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    auto v = rand_vec(rng, 4);
    EXPECT_TRUE(is_zero(graded_bracket(e, v, v)));
  }
}

TEST(Bracket, TOneIsOriginalAndHeisenbergScaleFree)
{
  std::mt19937_64 rng(11);
  auto sh = gradation(catalog::algebra_spec("engel4_sheared"));
  auto h = gradation(catalog::algebra_spec("heisenberg3"));
  for (int i = 0; i < 200; ++i) {
    auto v = rand_vec(rng, 4), w = rand_vec(rng, 4);
    EXPECT_EQ(bracket_t(sh, v, w, Rational(1)), bracket(sh.adapted_constants, v, w));
    auto a = rand_vec(rng, 3), b = rand_vec(rng, 3);
    Rational t = nctest::rand_q(rng, 9, 4);
    if (t <= 0)
      t = -t + 1;
    EXPECT_EQ(bracket_t(h, a, b, t), graded_bracket(h, a, b));
  }
}

TEST(Bracket, HomogeneousComponentIndependentOfT)
{
  std::mt19937_64 rng(12);
  for (const auto& name : catalog::algebra_names()) {
    auto g = gradation(catalog::algebra_spec(name));
    const std::size_t m = g.dim();
    for (int trial = 0; trial < 50; ++trial) {
      int di = 1 + static_cast<int>(rng() % g.step), dj = 1 + static_cast<int>(rng() % g.step);
      RationalVector v = zero_vector(m), w = zero_vector(m);
      for (std::size_t k = 0; k < m; ++k) {
        if (g.degrees[k] == di)
          v[k] = nctest::rand_q(rng);
        if (g.degrees[k] == dj)
          w[k] = nctest::rand_q(rng);
      }
      auto b1 = bracket_t(g, v, w, Rational(2)), b2 = bracket_t(g, v, w, Rational(7, 3));
      for (std::size_t k = 0; k < m; ++k) {
        if (g.degrees[k] == di + dj) {
          EXPECT_EQ(b1[k], b2[k]) << name;
        }
      }
    }
  }
}

TEST(Property, JacobiBothBrackets)
{
  std::mt19937_64 rng(13);
  for (const auto& name : catalog::core_group_names()) {
    auto g = gradation(catalog::algebra_spec(name));
    const std::size_t m = g.dim();
    for (int trial = 0; trial < 1000; ++trial) {
      auto u = rand_vec(rng, m), v = rand_vec(rng, m), w = rand_vec(rng, m);
      for (const auto* c : {&g.adapted_constants, &g.graded_constants}) {
        auto a = bracket(*c, u, bracket(*c, v, w));
        auto b = bracket(*c, v, bracket(*c, w, u));
        auto d = bracket(*c, w, bracket(*c, u, v));
        for (std::size_t k = 0; k < m; ++k)
          ASSERT_EQ(a[k] + b[k] + d[k], 0) << name;
      }
    }
  }
}

TEST(Property, DegreeSuperadditivity)
{
  for (const auto& name : catalog::algebra_names()) {
    auto g = gradation(catalog::algebra_spec(name));
    const std::size_t m = g.dim();
    // left-normed brackets [X_{i1}, [X_{i2}, ... X_{il}]] of every length <= step
    std::vector<std::pair<RationalVector, int>> layer;
    for (std::size_t i = 0; i < m; ++i)
      layer.push_back({unit_vector(m, i), g.degrees[i]});
    for (std::size_t len = 2; len <= g.step + 1; ++len) {
      std::vector<std::pair<RationalVector, int>> next;
      for (std::size_t i = 0; i < m; ++i)
        for (const auto& [w, d] : layer) {
          auto b = bracket(g.adapted_constants, unit_vector(m, i), w);
          if (is_zero(b))
            continue;
          const int need = g.degrees[i] + d;
          for (std::size_t k = 0; k < m; ++k) {
            if (b[k] != 0) {
              EXPECT_GE(g.degrees[k], need) << name;
            }
          }
          next.push_back({b, need});
        }
      layer = std::move(next);
    }
  }
}
