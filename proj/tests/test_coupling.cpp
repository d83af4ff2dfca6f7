#include <gtest/gtest.h>

#include "support.hpp"

using namespace nilcone;

namespace {

GroupPoint<Rational> qpt(const NilpotentGroup& G, std::vector<Rational> c) { return G.point(std::move(c)); }

// exact rational point uniform on a grid inside X
GroupPoint<Rational> rational_x(const Coupling& c, std::mt19937_64& rng)
{
  auto p = c.group().identity<Rational>();
  for (std::size_t i = 0; i < c.dim(); ++i) {
    Rational edge(c.x_box()[i]);
    Rational u(static_cast<long>(rng() % 997), 997);
    p.coords[i] = edge * u;
  }
  return p;
}

Digits random_word(const Lattice& L, std::mt19937_64& rng, int len)
{
  Digits g(L.dim(), 0);
  for (int k = 0; k < len; ++k)
    g = L.multiply(g, L.spec().generators[rng() % L.num_generators()]);
  return g;
}

} // namespace

TEST(Coupling, BuiltinsConstructAndBoxes)
{
  for (const auto& name : builtin_coupling_names())
    EXPECT_NO_THROW(builtin_coupling(name)) << name;
  EXPECT_EQ(builtin_coupling("heisenberg-identity").x_box(), (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(builtin_coupling("heisenberg-scale2").x_box(), (std::vector<double>{0.5, 1, 0.5}));
  EXPECT_EQ(builtin_coupling("heisenberg-shear").x_box(), (std::vector<double>{1, 1, 1}));
  EXPECT_THROW(builtin_coupling("heisenberg-rotate"), CouplingError);
  EXPECT_THROW(builtin_coupling("nosuch-identity"), CouplingError);
  EXPECT_EQ(&builtin_coupling("heisenberg3-identity"), &builtin_coupling("heisenberg-identity"));
}

TEST(Coupling, TwistValidation)
{
  const auto& L = catalog::lattice("heisenberg3");
  auto M = identity_matrix(3);
  M[0][0] = 2; // X1 -> 2X1 without X3 -> 2X3 is not an automorphism
  EXPECT_THROW(validate_twist({"bad", M}, L), CouplingError);
  M = identity_matrix(3);
  M[0][2] = 1;
  EXPECT_THROW(validate_twist({"upper", M}, L), CouplingError);
  M = identity_matrix(3);
  M[1][1] = -1;
  M[2][2] = -1;
  EXPECT_THROW(validate_twist({"neg", M}, L), CouplingError);
  M = identity_matrix(3);
  M[0][0] = Rational(1, 2);
  M[2][2] = Rational(1, 2);
  EXPECT_THROW(validate_twist({"half", M}, L), CouplingError);
  EXPECT_NO_THROW(validate_twist(builtin_twist("heisenberg3", "scale2"), L));
  EXPECT_NO_THROW(validate_twist(builtin_twist("heisenberg3", "shear"), L));
}

TEST(ReduceToDomain, Examples)
{
  const auto& c = builtin_coupling("heisenberg-identity");
  const auto& H = c.group();
  auto in = qpt(H, {Rational(1, 4), Rational(3, 5), Rational(0)});
  auto r = c.reduce_to_domain(in);
  EXPECT_EQ(r.x, in);
  EXPECT_EQ(r.lattice, (Digits{0, 0, 0}));

  auto w = qpt(H, {Rational(3, 2), Rational(1, 2), Rational(3, 4)});
  auto s = c.reduce_to_domain(w);
  EXPECT_TRUE(c.in_x(s.x));
  EXPECT_EQ(c.act_lambda(s.lattice, w), s.x);
}

TEST(Property, ReduceToDomainReconstruction)
{
  std::mt19937_64 rng(41);
  for (const auto& name : builtin_coupling_names()) {
    const auto& c = builtin_coupling(name);
    for (int i = 0; i < 500; ++i) {
      auto w = c.group().point(nctest::rand_vec(rng, c.dim(), 60, 7));
      auto r = c.reduce_to_domain(w);
      ASSERT_TRUE(c.in_x(r.x)) << name;
      ASSERT_EQ(c.act_lambda(r.lattice, w), r.x) << name;
      auto wd = convert<double>(w);
      auto rd = c.reduce_to_domain(wd);
      ASSERT_LT(nctest::max_abs_diff(c.act_lambda(rd.lattice, wd).coords, rd.x.coords), 1e-12);
    }
  }
}

TEST(Alpha, ExamplesAndUniqueness)
{
  const auto& c = builtin_coupling("heisenberg-identity");
  const auto& H = c.group();
  auto x = qpt(H, {Rational(1, 2), Rational(1, 2), Rational(1, 2)});
  EXPECT_EQ(c.alpha(Digits{0, 0, 0}, x).value, (Digits{0, 0, 0}));
  EXPECT_EQ(c.alpha(Digits{0, 0, 0}, x).next, x);

  auto a = c.alpha(Digits{1, 0, 0}, x);
  auto omega = qpt(H, {Rational(3, 2), Rational(1, 2), Rational(3, 4)});
  EXPECT_EQ(c.act_gamma(Digits{1, 0, 0}, x), omega);
  EXPECT_EQ(a.value, c.reduce_to_domain(omega).lattice);
  EXPECT_EQ(a.value, (Digits{1, 0, 1}));

  // exhaustive: exactly one lambda in a box of digits moves omega into X
  int hits = 0;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j)
      for (int k = -3; k <= 3; ++k)
        if (c.in_x(c.act_lambda(Digits{i, j, k}, omega))) {
          ++hits;
          EXPECT_EQ((Digits{i, j, k}), a.value);
        }
  EXPECT_EQ(hits, 1);

  EXPECT_EQ(c.beta(Digits{0, 0, 0}, x).value, (Digits{0, 0, 0}));
  EXPECT_EQ(c.induced_action(Digits{0, 0, 0}, x), x);
}

TEST(Alpha, Scale2Golden)
{
  const auto& c = builtin_coupling("heisenberg-scale2");
  auto x = convert<double>(qpt(c.group(), {Rational(1, 2), Rational(1, 2), Rational(1, 2)}));
  // x lies outside X = [0,1/2) x [0,1) x [0,1/2); the reduction still applies
  EXPECT_EQ(c.alpha(Digits{1, 0, 0}, x).value, (Digits{3, 0, 2}));
}

TEST(Property, CocycleIdentityAndCommutation)
{
  std::mt19937_64 rng(42);
  for (const auto& name : builtin_coupling_names()) {
    const auto& c = builtin_coupling(name);
    const auto& G = c.gamma_lattice();
    for (int i = 0; i < 2000; ++i) {
      auto x = rational_x(c, rng);
      auto g1 = random_word(G, rng, 3), g2 = random_word(G, rng, 3);
      auto a2 = c.alpha(g2, x);
      auto a1 = c.alpha(g1, a2.next);
      ASSERT_EQ(c.alpha(c.gamma_mul(g1, g2), x).value, c.lambda_mul(a1.value, a2.value)) << name;
      ASSERT_EQ(c.induced_action(g1, a2.next), c.induced_action(c.gamma_mul(g1, g2), x)) << name;
      // gamma x = x' iota(alpha)
      ASSERT_EQ(c.act_gamma(g2, x), a2.next * c.iota(c.lambda_point<Rational>(a2.value))) << name;

      auto l = random_word(c.lambda_lattice(), rng, 3);
      auto w = c.group().point(nctest::rand_vec(rng, c.dim()));
      ASSERT_EQ(c.act_gamma(g1, c.act_lambda(l, w)), c.act_lambda(l, c.act_gamma(g1, w))) << name;
    }
  }
}

TEST(Property, BetaInvertsAlphaOnQualifyingSet)
{
  std::mt19937_64 rng(43);
  for (const auto& name : builtin_coupling_names()) {
    const auto& c = builtin_coupling(name);
    int qualifying = 0;
    for (int i = 0; i < 2000; ++i) {
      auto x = rational_x(c, rng);
      auto g = random_word(c.gamma_lattice(), rng, 2);
      auto a = c.alpha(g, x);
      if (!c.in_y(x) || !c.in_y(a.next))
        continue;
      ++qualifying;
      ASSERT_EQ(c.beta(a.value, x).value, g) << name;
    }
    EXPECT_GT(qualifying, 100) << name;
  }
}

TEST(Property, AbelianCocycleIsTranslation)
{
  const auto& c = builtin_coupling("abelian2-identity");
  std::mt19937_64 rng(44);
  for (int i = 0; i < 1000; ++i) {
    Digits g{static_cast<std::int64_t>(rng() % 21) - 10, static_cast<std::int64_t>(rng() % 21) - 10};
    auto x = rational_x(c, rng);
    auto a = c.alpha(g, x);
    for (std::size_t k = 0; k < 2; ++k) {
      const Rational s = x.coords[k] + Rational(static_cast<long>(g[k]));
      EXPECT_EQ(a.value[k], ScalarTraits<Rational>::floor_int(s) - ScalarTraits<Rational>::floor_int(x.coords[k]));
    }
    EXPECT_EQ(a.next, x);
  }
}

TEST(SampleDomain, GoldenAndStreams)
{
  const auto& c = builtin_coupling("heisenberg-identity");
  SampleRng rng(7, 0);
  auto x = c.sample_domain(rng);
  EXPECT_EQ(x.coords, (std::vector<double>{0x1.3c2427148b18p-8, 0x1.c795e214e9609p-1, 0x1.1ff215f23261p-5}));
  int same = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    SampleRng a(7, i), b(8, i);
    same += c.sample_domain(a).coords == c.sample_domain(b).coords;
  }
  EXPECT_EQ(same, 0);
}

TEST(SampleDomain, MarginalsUniform)
{
  for (const auto& name : {"heisenberg-identity", "heisenberg-scale2"}) {
    const auto& c = builtin_coupling(name);
    auto pts = parallel_map<std::vector<double>>(100000, default_workers(), [&](std::size_t i) {
      SampleRng rng(99, i);
      return c.sample_domain(rng).coords;
    });
    for (std::size_t k = 0; k < c.dim(); ++k) {
      std::vector<double> col;
      for (const auto& p : pts)
        col.push_back(p[k]);
      EXPECT_LT(stats::ks_uniform(col, 0.0, c.x_box()[k]), 0.02) << name;
    }
  }
}

TEST(InducedAction, PushforwardUniform)
{
  for (const auto& name : builtin_coupling_names()) {
    const auto& c = builtin_coupling(name);
    const auto& s = c.gamma_lattice().spec().generators.front();
    auto pts = parallel_map<std::vector<double>>(100000, default_workers(), [&](std::size_t i) {
      SampleRng rng(5, i);
      return c.induced_action(s, c.sample_domain(rng)).coords;
    });
    for (std::size_t k = 0; k < c.dim(); ++k) {
      std::vector<double> col;
      for (const auto& p : pts)
        col.push_back(p[k]);
      EXPECT_LT(stats::ks_uniform(col, 0.0, c.x_box()[k]), 0.02) << name << " coord " << k;
    }
  }
}

TEST(Integrability, IdentityBoundedAbelianExact)
{
  const auto& c = builtin_coupling("heisenberg-identity");
  WordNormOracle norm(c.lambda_lattice());
  for (std::size_t s = 0; s < c.gamma_lattice().num_generators(); ++s) {
    auto r = integrability_estimate(c, s, 20000, 3, norm);
    EXPECT_EQ(r.fallbacks, 0u);
    EXPECT_LE(r.max_norm, 5.0);
    EXPECT_LE(r.ci_low, r.mean_norm);
    EXPECT_GE(r.ci_high, r.mean_norm);
  }

  const auto& ab = builtin_coupling("abelian2-identity");
  WordNormOracle an(ab.lambda_lattice());
  for (std::size_t s = 0; s < 4; ++s) {
    auto r = integrability_estimate(ab, s, 2000, 3, an);
    EXPECT_DOUBLE_EQ(r.mean_norm, 1.0);
    EXPECT_DOUBLE_EQ(r.max_norm, 1.0);
  }
}

TEST(Integrability, SubadditiveInWordLength)
{
  const auto& c = builtin_coupling("heisenberg-identity");
  const auto& L = c.gamma_lattice();
  WordNormOracle norm(c.lambda_lattice(), 14);
  double gen_max = 0;
  for (std::size_t s = 0; s < L.num_generators(); ++s)
    gen_max = std::max(gen_max, integrability_estimate(c, s, 4000, 4, norm).mean_norm);
  for (int k = 1; k <= 10; ++k) {
    Digits g = L.power_digits(L.spec().generators[0], k);
    auto r = integrability_estimate(c, g, 4000, 4, norm);
    EXPECT_LE(r.mean_norm, k * gen_max + 1e-9) << k;
  }
}

TEST(Integrability, Reproducible)
{
  const auto& c = builtin_coupling("heisenberg-shear");
  WordNormOracle norm(c.lambda_lattice());
  auto a = integrability_estimate(c, 2, 3000, 17, norm, 1);
  auto b = integrability_estimate(c, 2, 3000, 17, norm, 4);
  EXPECT_EQ(a.mean_norm, b.mean_norm);
  EXPECT_EQ(a.ci_high, b.ci_high);
}
