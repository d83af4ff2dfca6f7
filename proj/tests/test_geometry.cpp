#include <gtest/gtest.h>

#include <array>
#include <map>
#include <queue>

#include "support.hpp"

using namespace nilcone;

namespace {

GroupPoint<Rational> pt(const NilpotentGroup& G, std::vector<Rational> c, Law law = Law::original)
{
  return G.point(std::move(c), law);
}

GroupPoint<double> ptd(const NilpotentGroup& G, std::vector<double> c, Law law = Law::original)
{
  return G.point(std::move(c), law);
}

// Integer Heisenberg group as upper unitriangular (a, b, c) = [[1,a,c],[0,1,b],[0,0,1]].
std::vector<std::size_t> heisenberg_sphere_counts(int radius)
{
  using H = std::array<long, 3>;
  auto mul = [](const H& x, const H& y) { return H{x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]}; };
  const H gens[] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  std::map<H, int> dist{{H{0, 0, 0}, 0}};
  std::queue<H> q;
  q.push({0, 0, 0});
  std::vector<std::size_t> counts(static_cast<std::size_t>(radius) + 1, 0);
  counts[0] = 1;
  while (!q.empty()) {
    auto x = q.front();
    q.pop();
    const int d = dist[x];
    if (d == radius)
      continue;
    for (const auto& s : gens) {
      auto y = mul(x, s);
      if (dist.emplace(y, d + 1).second) {
        ++counts[static_cast<std::size_t>(d + 1)];
        q.push(y);
      }
    }
  }
  return counts;
}

} // namespace

TEST(Dilation, Examples)
{
  const auto& H = catalog::group("heisenberg3");
  EXPECT_EQ(dilation(pt(H, {1, 1, 1}, Law::graded), Rational(2)), pt(H, {2, 2, 4}, Law::graded));
  auto g = pt(H, {Rational(3, 7), -2, 5}, Law::graded);
  EXPECT_EQ(dilation(g, Rational(1)), g);
  EXPECT_THROW(dilation(g, Rational(0)), std::domain_error);
  EXPECT_THROW(dilation(g, Rational(-1)), std::domain_error);
}

TEST(Scl, Examples)
{
  const auto& H = catalog::group("heisenberg3");
  auto g = pt(H, {4, -1, 9});
  EXPECT_EQ(scl(g, Rational(1)).coords, g.coords);
  EXPECT_EQ(scl(g, Rational(1)).law, Law::graded);
  for (long n : {1, 2, 5, 17, 64}) {
    EXPECT_EQ(scl(pt(H, {n, 0, 0}), Rational(n)), pt(H, {1, 0, 0}, Law::graded));
    EXPECT_EQ(scl(pt(H, {0, 0, n * n}), Rational(n)), pt(H, {0, 0, 1}, Law::graded));
  }
}

TEST(Projections, Examples)
{
  const auto& H = catalog::group("heisenberg3");
  auto g = pt(H, {1, 2, 3});
  EXPECT_EQ(pi_ab(g), pt(H, {1, 2, 0}));
  EXPECT_EQ(pi_com(g), pt(H, {0, 0, 3}));
  EXPECT_EQ(pi_ab(pi_ab(g)), pi_ab(g));
}

TEST(QuasiNorm, Examples)
{
  const auto& H = catalog::group("heisenberg3");
  EXPECT_DOUBLE_EQ(quasi_norm_m(pt(H, {3, -4, 9})), 4.0);
  EXPECT_DOUBLE_EQ(quasi_norm_m(H.identity<Rational>()), 0.0);
}

TEST(Property, QuasiNormHomogeneousExactly)
{
  std::mt19937_64 rng(21);
  for (const auto& name : catalog::core_group_names()) {
    const auto& G = catalog::group(name);
    const int D = degree_lcm(G);
    for (int i = 0; i < 1000; ++i) {
      auto g = nctest::rand_point(G, rng, Law::graded);
      Rational t(static_cast<long>(1 + rng() % 9), static_cast<long>(1 + rng() % 4));
      Rational tD = 1;
      for (int k = 0; k < D; ++k)
        tD *= t;
      ASSERT_EQ(quasi_norm_m_power(dilation(g, t)), tD * quasi_norm_m_power(g)) << name;
      ASSERT_NEAR(quasi_norm_m(dilation(g, t)), t.get_d() * quasi_norm_m(g), 1e-9 * (1 + quasi_norm_m(g)));
    }
  }
}

// scl(gamma sigma, n) against scl(gamma, n) * scl(sigma, n) in a non-graded group.
TEST(Property, SclMultiplicativity)
{
  const auto& G = catalog::group("engel4_sheared");
  std::mt19937_64 rng(22);
  double coord_ratio = 0, qn_prev = 0;
  int ratio_count = 0;
  bool qn_decreasing = true;
  std::vector<double> qn_by_n;
  const int trials = 100;
  for (long n : {8L, 16L, 32L, 64L}) {
    std::mt19937_64 r(rng());
    double qn_mean = 0;
    for (int t = 0; t < trials; ++t) {
      auto g0 = nctest::rand_point(G, r), h0 = nctest::rand_point(G, r);
      auto defect = [&](long k) {
        auto gs = power(g0, k) * power(h0, k);
        auto lhs = scl(gs, Rational(k));
        auto rhs = scl(power(g0, k), Rational(k)) * scl(power(h0, k), Rational(k));
        return inverse(convert<double>(lhs)) * convert<double>(rhs);
      };
      qn_mean += quasi_norm_m(defect(n)) / trials;
      if (n == 64) {
        auto a = defect(32), b = defect(64);
        double ma = 0, mb = 0;
        for (std::size_t k = 0; k < a.coords.size(); ++k) {
          ma = std::max(ma, std::fabs(a.coords[k]));
          mb = std::max(mb, std::fabs(b.coords[k]));
        }
        // commuting pairs have no defect at any scale
        if (ma > 0) {
          coord_ratio += mb / ma;
          ++ratio_count;
        }
      }
    }
    if (!qn_by_n.empty() && !(qn_mean < qn_prev))
      qn_decreasing = false;
    qn_prev = qn_mean;
    qn_by_n.push_back(qn_mean);
  }
  ASSERT_GE(ratio_count, trials / 2);
  EXPECT_LE(coord_ratio / ratio_count, 0.6);
  EXPECT_TRUE(qn_decreasing);
}

TEST(Property, CommutatorGrowthSublinear)
{
  const auto& H = catalog::group("heisenberg3");
  std::vector<double> v;
  for (double n : {8.0, 16.0, 32.0, 64.0, 128.0}) {
    auto g = ptd(H, {std::sqrt(n), 0.3 * std::sqrt(n), 0});
    auto h = ptd(H, {0.5 * n, n, 0.2 * n * n});
    v.push_back(quasi_norm_m(commutator(g, h)) / n);
  }
  EXPECT_TRUE(stats::strictly_decreasing(v));
}

// ---- lattice ---------------------------------------------------------------

TEST(Lattice, DigitsRoundTrip)
{
  std::mt19937_64 rng(23);
  for (const auto& name : catalog::core_group_names()) {
    const auto& L = catalog::lattice(name);
    for (int i = 0; i < 200; ++i) {
      Digits k(L.dim());
      for (auto& d : k)
        d = static_cast<std::int64_t>(rng() % 15) - 7;
      auto g = L.from_digits<Rational>(k);
      EXPECT_TRUE(L.contains(g));
      EXPECT_EQ(L.integer_digits(g), k);
      EXPECT_EQ(L.round_to_lattice(g), g);
    }
  }
}

TEST(Lattice, ReduceLeftLandsInBox)
{
  std::mt19937_64 rng(24);
  for (const auto& name : catalog::core_group_names()) {
    const auto& L = catalog::lattice(name);
    for (int i = 0; i < 300; ++i) {
      auto w = L.group().point(nctest::rand_vec(rng, L.dim(), 40, 7));
      auto r = L.reduce_left(w);
      EXPECT_TRUE(L.in_box(r.remainder));
      EXPECT_EQ(r.lattice_point * r.remainder, w);
      EXPECT_EQ(L.from_digits<Rational>(r.digits), r.lattice_point);
    }
  }
}

TEST(Lattice, NotClosedOrAsymmetricRejected)
{
  const auto& H = catalog::group("heisenberg3");
  EXPECT_THROW(Lattice(H, Lattice::standard_spec(H, {1, 1, 2}, "bad")), LatticeError);
  auto spec = Lattice::standard_spec(H, {1, 1, 1}, "asym");
  spec.generators.pop_back();
  EXPECT_THROW(Lattice(H, spec), LatticeError);
  const auto& L = catalog::lattice("heisenberg3");
  EXPECT_THROW(L.integer_digits(pt(H, {Rational(1, 2), 0, 0})), LatticeError);
}

TEST(Lattice, DivisorLatticeMembership)
{
  const auto& L = catalog::lattice("engel4");
  std::mt19937_64 rng(25);
  for (int i = 0; i < 200; ++i) {
    auto g = L.group().point(nctest::rand_vec(rng, 4, 30, 7));
    auto r = L.round_to_lattice(g);
    EXPECT_TRUE(L.contains(r));
    auto k = L.round_to_digits(g);
    EXPECT_EQ(L.from_digits<Rational>(k), r);
    // the u_2 power carries the divisor
    auto p = L.coordinate_power<Rational>(1, k[1]);
    EXPECT_EQ(p.coords[1], Rational(static_cast<long>(2 * k[1])));
  }
}

TEST(RoundToLattice, LocalSearchOracle)
{
  const auto& H = catalog::group("heisenberg3");
  const auto& L = catalog::lattice("heisenberg3");
  auto dist = [&](const GroupPoint<Rational>& a, const GroupPoint<Rational>& b) {
    return quasi_norm_m(inverse(a) * b);
  };
  auto g = pt(H, {Rational(2, 5), Rational(2, 5), Rational(2, 5)});
  auto r = L.round_to_lattice(g);
  const double d0 = dist(r, g);
  auto k = L.round_to_digits(g);
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c) {
        Digits v{k[0] + a, k[1] + b, k[2] + c};
        EXPECT_LE(d0, dist(L.from_digits<Rational>(v), g) + 1e-12);
      }

  // bounded distance on random points
  std::mt19937_64 rng(26);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    auto w = H.point(nctest::rand_vec(rng, 3, 200, 9));
    worst = std::max(worst, dist(L.round_to_lattice(w), w));
  }
  EXPECT_LT(worst, 1.5);
}

// ---- word metric -----------------------------------------------------------

TEST(WordMetric, AbelianBallClosedForm)
{
  CayleyBall ball(catalog::lattice("abelian2"), 10);
  std::size_t total = 0;
  for (std::size_t n = 0; n < ball.sphere_sizes().size(); ++n) {
    total += ball.sphere_sizes()[n];
    EXPECT_EQ(total, 2 * n * n + 2 * n + 1);
  }
  auto prof = ball_profile(ball);
  ASSERT_EQ(prof.size(), 11u);
  EXPECT_EQ(prof[10].ball_size, 221u);
}

TEST(WordMetric, HeisenbergMatchesIntegerBfs)
{
  const int R = 10;
  CayleyBall ball(catalog::lattice("heisenberg3"), R);
  auto want = heisenberg_sphere_counts(R);
  ASSERT_EQ(ball.sphere_sizes().size(), want.size());
  for (std::size_t n = 0; n < want.size(); ++n)
    EXPECT_EQ(ball.sphere_sizes()[n], want[n]) << "sphere " << n;
}

TEST(WordMetric, NormExamples)
{
  const auto& L = catalog::lattice("heisenberg3");
  const auto& H = L.group();
  EXPECT_EQ(word_norm_bfs(L, H.identity<Rational>(), 5), 0);
  for (std::size_t s = 0; s < L.num_generators(); ++s)
    EXPECT_EQ(word_norm_bfs(L, L.generator<Rational>(s), 5), 1);
  EXPECT_EQ(word_norm_bfs(L, pt(H, {0, 0, 1}), 8), 4);
  EXPECT_FALSE(word_norm_bfs(L, pt(H, {9, 0, 0}), 5).has_value());
}

TEST(WordMetric, PowersGrowLinearly)
{
  for (const auto& name : {"heisenberg3", "engel4", "heisenberg5"}) {
    const auto& L = catalog::lattice(name);
    const auto& ball = cached_ball(L, 12);
    for (std::size_t s = 0; s < L.num_generators(); ++s) {
      double l = 1e9;
      for (int n = 1; n <= 12; ++n) {
        auto d = ball.distance(L.power_digits(L.spec().generators[s], n));
        ASSERT_TRUE(d.has_value());
        l = std::min(l, static_cast<double>(*d) / n);
      }
      EXPECT_GT(l, 0.5) << name;
    }
  }
}

TEST(WordMetric, CapExceededThrows)
{
  EXPECT_THROW(CayleyBall(catalog::lattice("heisenberg3"), 20, 1000), CapExceeded);
}

TEST(WordMetric, CoordinateGrowthExponents)
{
  const auto& ball = cached_ball(catalog::lattice("heisenberg3"), 20);
  auto prof = ball_profile(ball);
  std::vector<double> n, size, c1, c3;
  for (const auto& r : prof)
    if (r.n >= 10) {
      n.push_back(r.n);
      size.push_back(static_cast<double>(r.ball_size));
      c1.push_back(r.max_coord[0]);
      c3.push_back(r.max_coord[2]);
    }
  EXPECT_NEAR(stats::loglog_slope(n, size), 4.0, 0.2);
  EXPECT_NEAR(stats::loglog_slope(n, c1), 1.0, 0.15);
  EXPECT_NEAR(stats::loglog_slope(n, c3), 2.0, 0.15);
}

TEST(Guivarch, AbelianLInfinityGeneratorsNearOne)
{
  const auto& G = catalog::group("abelian2");
  LatticeSpec spec{"linf", {1, 1}, {}};
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      if (a || b)
        spec.generators.push_back({a, b});
  Lattice L(G, spec);
  CayleyBall ball(L, 10);
  auto c = guivarch_constants(ball, 10);
  EXPECT_DOUBLE_EQ(c.c_low, 1.0);
  EXPECT_LE(c.c_high, 1.0);
  EXPECT_EQ(c.com_missing, 0u);
}

TEST(CcDistance, Examples)
{
  const auto& L = catalog::lattice("heisenberg3");
  const auto& H = L.group();
  const auto& ball = cached_ball(L, 20);
  auto g = ptd(H, {0.3, -0.2, 0.1}, Law::graded);
  EXPECT_DOUBLE_EQ(approx_cc_distance(ball, g, g, 10).value, 0.0);
  auto h = ptd(H, {-0.5, 0.7, 0.25}, Law::graded), k = ptd(H, {1.1, 0.4, -0.3}, Law::graded);
  EXPECT_NEAR(approx_cc_distance(ball, k * g, k * h, 1, CcMode::quasi_norm).value,
              approx_cc_distance(ball, g, h, 1, CcMode::quasi_norm).value, 1e-12);
  auto e = H.identity<double>(Law::graded);
  auto e1 = ptd(H, {1, 0, 0}, Law::graded);
  std::vector<double> est;
  for (int n : {5, 10, 20})
    est.push_back(approx_cc_distance(ball, e, e1, n).value);
  EXPECT_LE(std::fabs(est[1] - est[0]), 2.0 / 5);
  EXPECT_LE(std::fabs(est[2] - est[1]), 2.0 / 10);
  auto far = approx_cc_distance(ball, e, ptd(H, {50, 0, 0}, Law::graded), 1);
  EXPECT_TRUE(far.fallback);
  EXPECT_THROW(approx_cc_distance(ball, e, e1, 0), std::invalid_argument);
}
