#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nilcone/coupling.hpp"
#include "nilcone/factorization.hpp"
#include "nilcone/geometry.hpp"
#include "nilcone/random.hpp"
#include "nilcone/stats.hpp"

namespace nilcone {

/// ᾱ_ab estimates average (1/N) pi_ab alpha(s^N, x); the cocycle identity
/// makes this unbiased for every N while the bounded telescoping error
/// divides the sample spread by N.
inline constexpr std::int64_t kDefaultAveragingDepth = 64;
inline constexpr std::size_t kDefaultImageSamples = 1u << 14;

enum class CocycleKind { alpha, beta };

/// alpha on X (Gamma -> Lambda) or beta on Y (Lambda -> Gamma), behind one interface.
class CocycleView {
public:
  CocycleView(const Coupling& c, CocycleKind kind) : c_(&c), kind_(kind) {}

  const Coupling& coupling() const { return *c_; }
  CocycleKind kind() const { return kind_; }
  const char* label() const { return kind_ == CocycleKind::alpha ? "alpha" : "beta"; }
  const Lattice& source() const { return kind_ == CocycleKind::alpha ? c_->gamma_lattice() : c_->lambda_lattice(); }
  const Lattice& target() const { return kind_ == CocycleKind::alpha ? c_->lambda_lattice() : c_->gamma_lattice(); }

  GroupPoint<double> sample(SampleRng& rng) const
  {
    return c_->sample_domain(rng, kind_ == CocycleKind::alpha ? DomainSide::X : DomainSide::Y);
  }

  CocycleValue<double> operator()(const Digits& g, const GroupPoint<double>& x) const
  {
    return kind_ == CocycleKind::alpha ? c_->alpha(g, x) : c_->beta(g, x);
  }

  GroupPoint<double> next(const Digits& g, const GroupPoint<double>& x) const
  {
    return kind_ == CocycleKind::alpha ? c_->induced_action(g, x) : c_->induced_action_y(g, x);
  }

  /// Cocycle value as a point of the target group (original law).
  GroupPoint<double> value_point(const Digits& g, const GroupPoint<double>& x) const
  {
    return target().from_digits<double>((*this)(g, x).value);
  }

private:
  const Coupling* c_;
  CocycleKind kind_;
};

namespace detail {
inline std::vector<double> abelian_part(const GroupPoint<double>& p)
{
  const std::size_t d = p.group->abelian_dim();
  return std::vector<double>(p.coords.begin(), p.coords.begin() + static_cast<std::ptrdiff_t>(d));
}

inline GroupPoint<double> abelian_point(const NilpotentGroup& G, const std::vector<double>& v, double scale = 1.0)
{
  auto p = G.identity<double>(Law::graded);
  for (std::size_t i = 0; i < v.size(); ++i)
    p.coords[i] = scale * v[i];
  return p;
}

inline double euclid(const std::vector<double>& a, const std::vector<double>& b)
{
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}
} // namespace detail

struct AbelianMean {
  std::vector<double> mean;
  std::vector<double> half_width; // 95% CI half width per coordinate
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::int64_t depth = 1;
};

/// Monte Carlo estimate of ᾱ_ab(gamma) = E[pi_ab alpha(gamma, x)], through
/// (1/depth) pi_ab alpha(gamma^depth, x).
inline AbelianMean mean_abelianization(const CocycleView& view, const Digits& gamma, std::size_t samples,
                                       std::uint64_t seed, std::int64_t depth = 1,
                                       std::size_t workers = default_workers())
{
  if (samples < 1 || depth < 1)
    throw std::invalid_argument("mean_abelianization: samples and depth must be >= 1");
  const Digits g = depth == 1 ? gamma : view.source().power_digits(gamma, depth);
  auto rows = parallel_map<std::vector<double>>(samples, workers, [&](std::size_t i) {
    SampleRng rng(seed, i);
    auto x = view.sample(rng);
    return detail::abelian_part(view.value_point(g, x));
  });
  AbelianMean out;
  out.samples = samples;
  out.seed = seed;
  out.depth = depth;
  const std::size_t d = view.target().group().abelian_dim();
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> col(samples);
    for (std::size_t i = 0; i < samples; ++i)
      col[i] = rows[i][k] / static_cast<double>(depth);
    auto ci = stats::mean_ci(col);
    out.mean.push_back(ci.mean);
    out.half_width.push_back(ci.half_width);
  }
  return out;
}

/// (1/n) pi_ab alpha(gamma^n, x) along one orbit.
inline std::vector<double> cocycle_ergodic_average(const CocycleView& view, const Digits& gamma,
                                                   const GroupPoint<double>& x, std::int64_t n)
{
  if (n < 1)
    throw std::invalid_argument("cocycle_ergodic_average: n must be >= 1");
  auto v = detail::abelian_part(view.value_point(view.source().power_digits(gamma, n), x));
  for (auto& a : v)
    a /= static_cast<double>(n);
  return v;
}

struct GeneratorImageTable {
  std::vector<Digits> generators; // the generating set S of the source lattice
  std::vector<AbelianMean> images;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::int64_t depth = 1;
};

inline GeneratorImageTable generator_images(const CocycleView& view, std::size_t samples, std::uint64_t seed,
                                            std::int64_t depth = kDefaultAveragingDepth,
                                            std::size_t workers = default_workers())
{
  GeneratorImageTable t;
  t.samples = samples;
  t.seed = seed;
  t.depth = depth;
  t.generators = view.source().spec().generators;
  for (const auto& s : t.generators)
    t.images.push_back(mean_abelianization(view, s, samples, seed, depth, workers));
  return t;
}

/// Phi: G_infinity -> H_infinity, Phi(delta_{a_1}s_1 * ... ) = delta_{a_1}ᾱ_ab(s_1) * ...
class PansuDerivative {
public:
  PansuDerivative(const Lattice& source, const NilpotentGroup& target, GeneratorImageTable table)
      : source_(&source.group()), target_(&target), table_(std::move(table))
  {
    const std::size_t d = source_->abelian_dim();
    horizontal_.resize(2 * d);
    for (std::size_t i = 0; i < d; ++i)
      for (int sgn : {1, -1}) {
        Digits want(source_->dim(), 0);
        want[i] = sgn;
        bool found = false;
        for (std::size_t s = 0; s < table_.generators.size() && !found; ++s)
          if (table_.generators[s] == want) {
            auto v = table_.images[s].mean;
            for (auto& a : v)
              a /= static_cast<double>(source.divisor(i));
            horizontal_[2 * i + (sgn < 0)] = std::move(v);
            found = true;
          }
        if (!found)
          throw std::invalid_argument("generating set lacks the coordinate generator u_" + std::to_string(i + 1) +
                                      (sgn < 0 ? "^-1" : ""));
      }
  }

  const NilpotentGroup& source() const { return *source_; }
  const NilpotentGroup& target() const { return *target_; }
  const GeneratorImageTable& table() const { return table_; }

  /// Image of the horizontal generator +-e_i (index 2i or 2i+1), abelian coordinates.
  const std::vector<double>& horizontal_image(std::size_t index) const { return horizontal_.at(index); }

  /// Column i is the image of +e_i.
  std::vector<std::vector<double>> abelian_matrix() const
  {
    const std::size_t d = source_->abelian_dim(), dt = target_->abelian_dim();
    std::vector<std::vector<double>> M(dt, std::vector<double>(d));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t r = 0; r < dt; ++r)
        M[r][i] = horizontal_[2 * i][r];
    return M;
  }

  GroupPoint<double> apply(const Factorization& f) const
  {
    auto p = target_->identity<double>(Law::graded);
    for (const auto& t : f.terms)
      p = p * detail::abelian_point(*target_, horizontal_.at(t.generator), t.exponent);
    return p;
  }

  GroupPoint<double> apply(const GroupPoint<double>& g, FactorOrder order = FactorOrder::forward) const
  {
    if (g.group != source_)
      throw std::invalid_argument("phi_apply: point is not in the source group");
    return apply(horizontal_factorization(g, order));
  }

private:
  const NilpotentGroup* source_;
  const NilpotentGroup* target_;
  GeneratorImageTable table_;
  std::vector<std::vector<double>> horizontal_;
};

inline PansuDerivative build_derivative(const CocycleView& view, std::size_t samples, std::uint64_t seed,
                                        std::int64_t depth = kDefaultAveragingDepth,
                                        std::size_t workers = default_workers())
{
  return PansuDerivative(view.source(), view.target().group(), generator_images(view, samples, seed, depth, workers));
}

inline PansuDerivative build_phi(const Coupling& c, std::size_t samples, std::uint64_t seed,
                                 std::int64_t depth = kDefaultAveragingDepth, std::size_t workers = default_workers())
{
  return build_derivative(CocycleView(c, CocycleKind::alpha), samples, seed, depth, workers);
}

inline PansuDerivative build_psi(const Coupling& c, std::size_t samples, std::uint64_t seed,
                                 std::int64_t depth = kDefaultAveragingDepth, std::size_t workers = default_workers())
{
  return build_derivative(CocycleView(c, CocycleKind::beta), samples, seed, depth, workers);
}

inline GroupPoint<double> phi_apply(const PansuDerivative& phi, const GroupPoint<double>& g,
                                    FactorOrder order = FactorOrder::forward)
{
  return phi.apply(g, order);
}

/// gamma_n = s_1^{floor(n a_1 / eta)} ... s_k^{floor(n a_k / eta)}, with s the
/// lattice coordinate generator behind each horizontal factor.
inline Digits gamma_sequence(const Lattice& lattice, const Factorization& f, std::int64_t n)
{
  auto p = lattice.group().identity<Rational>();
  for (const auto& t : f.terms) {
    const std::size_t i = t.generator / 2;
    const auto k = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * t.exponent /
                                                        static_cast<double>(lattice.divisor(i))));
    if (k != 0)
      p = p * lattice.coordinate_power<Rational>(i, t.generator % 2 == 0 ? k : -k);
  }
  return lattice.integer_digits(p);
}

inline Digits gamma_sequence(const Lattice& lattice, const GroupPoint<double>& g, std::int64_t n,
                             FactorOrder order = FactorOrder::forward)
{
  return gamma_sequence(lattice, horizontal_factorization(g, order), n);
}

struct ConvergenceRow {
  std::int64_t n = 0;
  std::size_t samples = 0;
  double fraction_within_eps = 0;
  double median_proxy_dist = 0;
  std::uint64_t seed = 0;
};

struct ConvergenceReport {
  std::string experiment;
  double eps = 0;
  double threshold = 0.9;
  std::vector<ConvergenceRow> rows;

  std::vector<double> fractions() const
  {
    std::vector<double> f;
    for (const auto& r : rows)
      f.push_back(r.fraction_within_eps);
    return f;
  }
  std::vector<double> medians() const
  {
    std::vector<double> m;
    for (const auto& r : rows)
      m.push_back(r.median_proxy_dist);
    return m;
  }
  double final_fraction() const { return rows.empty() ? 0.0 : rows.back().fraction_within_eps; }
  bool trend_ok() const { return stats::non_decreasing(stats::median3(fractions())); }
  bool passes() const { return trend_ok() && final_fraction() >= threshold; }
};

inline void check_n_list(const std::vector<std::int64_t>& n_list)
{
  if (n_list.empty())
    throw std::invalid_argument("n list must be nonempty");
  for (std::size_t i = 0; i < n_list.size(); ++i)
    if (n_list[i] < 1 || (i > 0 && n_list[i] <= n_list[i - 1]))
      throw std::invalid_argument("n list must be positive and strictly ascending");
}

inline ConvergenceRow summarize(std::int64_t n, const std::vector<double>& dist, double eps, std::uint64_t seed)
{
  return {n, dist.size(), stats::fraction_below(dist, eps), stats::median(dist), seed};
}

struct MainTheoremOptions {
  double eps = 0.2;
  std::size_t samples = 4096;
  std::uint64_t seed = 0;
  std::optional<GroupPoint<double>> target; // defaults to Phi(g)
  std::optional<Digits> perturbation;       // gamma_n replaced by gamma_n * w
  FactorOrder order = FactorOrder::forward;
  std::size_t workers = default_workers();
};

/// Fraction of x with proxy d(scl(alpha(gamma_n, x), n), Phi(g)) < eps, per n.
inline ConvergenceReport main_theorem_experiment(const CocycleView& view, const PansuDerivative& phi,
                                                 const GroupPoint<double>& g, const std::vector<std::int64_t>& n_list,
                                                 const MainTheoremOptions& opt)
{
  check_n_list(n_list);
  const auto target = opt.target ? with_law(*opt.target, Law::graded) : phi.apply(g, opt.order);
  const auto fac = horizontal_factorization(g, opt.order);
  ConvergenceReport rep;
  rep.experiment = "main-theorem";
  rep.eps = opt.eps;
  for (auto n : n_list) {
    auto gn = gamma_sequence(view.source(), fac, n);
    if (opt.perturbation)
      gn = view.source().multiply(gn, *opt.perturbation);
    auto dist = parallel_map<double>(opt.samples, opt.workers, [&](std::size_t i) {
      SampleRng rng(opt.seed, i);
      auto x = view.sample(rng);
      return proxy_distance(scl(view.value_point(gn, x), static_cast<double>(n)), target);
    });
    rep.rows.push_back(summarize(n, dist, opt.eps, opt.seed));
  }
  return rep;
}

struct IterateRow {
  std::int64_t n = 0;
  std::size_t samples = 0;
  double median_ab_deviation = 0; // ||(1/n) pi_ab alpha(gamma^n, x) - ᾱ_ab(gamma)||
  double median_com_ratio = 0;    // |pi_com alpha(gamma^n, x)|_m / n
  double median_proxy = 0;        // d(scl(alpha(gamma^n, x), n), ᾱ_ab(gamma))
};

struct IterateReport {
  Digits gamma;
  AbelianMean abar;
  std::vector<IterateRow> rows;

  template <typename F> std::vector<double> column(F f) const
  {
    std::vector<double> v;
    for (const auto& r : rows)
      v.push_back(f(r));
    return v;
  }
  bool com_strictly_decreasing() const
  {
    return stats::strictly_decreasing(column([](const IterateRow& r) { return r.median_com_ratio; }));
  }
  bool proxy_decreasing() const
  {
    return stats::strictly_decreasing(column([](const IterateRow& r) { return r.median_proxy; }));
  }
};

/// Iterate asymptotics of alpha(gamma^n, x); ᾱ_ab(gamma) is estimated from
/// an independent stream (master seed + 1).
inline IterateReport iterate_diagnostics(const CocycleView& view, const Digits& gamma,
                                         const std::vector<std::int64_t>& n_list, std::size_t samples,
                                         std::uint64_t seed, std::size_t abar_samples = kDefaultImageSamples,
                                         std::size_t workers = default_workers())
{
  check_n_list(n_list);
  IterateReport rep;
  rep.gamma = gamma;
  rep.abar = mean_abelianization(view, gamma, abar_samples, seed + 1, kDefaultAveragingDepth, workers);
  const auto& H = view.target().group();
  const auto abar_pt = detail::abelian_point(H, rep.abar.mean);
  for (auto n : n_list) {
    const auto gn = view.source().power_digits(gamma, n);
    struct Sample {
      double ab = 0, com = 0, proxy = 0;
    };
    auto rows = parallel_map<Sample>(samples, workers, [&](std::size_t i) {
      SampleRng rng(seed, i);
      auto x = view.sample(rng);
      auto p = view.value_point(gn, x);
      const double nd = static_cast<double>(n);
      auto ab = detail::abelian_part(p);
      for (auto& a : ab)
        a /= nd;
      return Sample{detail::euclid(ab, rep.abar.mean), quasi_norm_m(pi_com(p)) / nd,
                    proxy_distance(scl(p, nd), abar_pt)};
    });
    std::vector<double> a, b, c;
    for (const auto& r : rows) {
      a.push_back(r.ab);
      b.push_back(r.com);
      c.push_back(r.proxy);
    }
    rep.rows.push_back({n, samples, stats::median(a), stats::median(b), stats::median(c)});
  }
  return rep;
}

struct GrowthRow {
  std::int64_t n = 0;
  double M = 0;
  double tail = 0; // P[|alpha(gamma^n, .)| > M n]
};

struct GrowthReport {
  std::vector<GrowthRow> rows;
  double max_ratio = 0; // max over samples and n of |alpha(gamma^n, x)| / n

  /// Smallest grid M whose tail stays below `level` for every n >= n_min.
  std::optional<double> bound(double level = 0.05, std::int64_t n_min = 16) const
  {
    std::set<double> ms;
    for (const auto& r : rows)
      ms.insert(r.M);
    for (double M : ms) {
      bool ok = true;
      for (const auto& r : rows)
        if (r.M == M && r.n >= n_min && !(r.tail < level))
          ok = false;
      if (ok)
        return M;
    }
    return std::nullopt;
  }
};

inline GrowthReport subadditive_growth_probe(const CocycleView& view, const Digits& gamma,
                                             const std::vector<std::int64_t>& n_list, const std::vector<double>& m_grid,
                                             std::size_t samples, std::uint64_t seed, const WordNormOracle& norm,
                                             std::size_t workers = default_workers())
{
  check_n_list(n_list);
  GrowthReport rep;
  for (auto n : n_list) {
    const auto gn = view.source().power_digits(gamma, n);
    auto ratios = parallel_map<double>(samples, workers, [&](std::size_t i) {
      SampleRng rng(seed, i);
      auto x = view.sample(rng);
      return norm(view(gn, x).value) / static_cast<double>(n);
    });
    for (double r : ratios)
      rep.max_ratio = std::max(rep.max_ratio, r);
    for (double M : m_grid) {
      std::size_t over = 0;
      for (double r : ratios)
        over += r > M;
      rep.rows.push_back({n, M, static_cast<double>(over) / static_cast<double>(samples)});
    }
  }
  return rep;
}

struct DefectReport {
  double max = 0;
  double mean = 0;
  std::size_t count = 0;
};

inline DefectReport summarize_defects(const std::vector<double>& v)
{
  DefectReport r;
  r.count = v.size();
  for (double x : v) {
    r.max = std::max(r.max, x);
    r.mean += x;
  }
  if (!v.empty())
    r.mean /= static_cast<double>(v.size());
  return r;
}

/// max d(Phi(g h), Phi(g) Phi(h)).
inline DefectReport homomorphism_check(const PansuDerivative& phi,
                                       const std::vector<std::pair<GroupPoint<double>, GroupPoint<double>>>& pairs)
{
  std::vector<double> d;
  for (const auto& [g, h] : pairs) {
    auto gh = with_law(g, Law::graded) * with_law(h, Law::graded);
    d.push_back(proxy_distance(phi.apply(gh), phi.apply(g) * phi.apply(h)));
  }
  return summarize_defects(d);
}

/// max d(Psi(Phi(g)), g).
inline DefectReport inverse_check(const PansuDerivative& phi, const PansuDerivative& psi,
                                  const std::vector<GroupPoint<double>>& points)
{
  std::vector<double> d;
  for (const auto& g : points)
    d.push_back(proxy_distance(psi.apply(phi.apply(g)), with_law(g, Law::graded)));
  return summarize_defects(d);
}

/// Images of g under the forward and reverse factorizations.
inline DefectReport well_definedness_check(const PansuDerivative& phi, const std::vector<GroupPoint<double>>& points)
{
  std::vector<double> d;
  for (const auto& g : points)
    d.push_back(proxy_distance(phi.apply(g, FactorOrder::forward), phi.apply(g, FactorOrder::reverse)));
  return summarize_defects(d);
}

/// d(Phi(delta_t g), delta_t Phi(g)).
inline DefectReport homogeneity_check(const PansuDerivative& phi, const std::vector<GroupPoint<double>>& points,
                                      double t)
{
  std::vector<double> d;
  for (const auto& g : points)
    d.push_back(proxy_distance(phi.apply(dilation(with_law(g, Law::graded), t)), dilation(phi.apply(g), t)));
  return summarize_defects(d);
}

/// Points of G_infinity with coordinate i on the grid step^{d_i} Z and
/// quasi-norm at most R.
inline std::vector<GroupPoint<double>> ball_grid(const NilpotentGroup& G, double R, double step)
{
  if (!(R >= 0) || !(step > 0))
    throw std::invalid_argument("ball_grid: need R >= 0 and step > 0");
  std::vector<std::vector<double>> axes;
  for (std::size_t i = 0; i < G.dim(); ++i) {
    const double s = std::pow(step, G.degree(i)), lim = std::pow(R, G.degree(i));
    const auto k = static_cast<std::int64_t>(std::floor(lim / s + 1e-9));
    std::vector<double> ax;
    for (std::int64_t j = -k; j <= k; ++j)
      ax.push_back(static_cast<double>(j) * s);
    axes.push_back(std::move(ax));
  }
  std::vector<GroupPoint<double>> out;
  std::vector<std::size_t> idx(G.dim(), 0);
  while (true) {
    auto p = G.identity<double>(Law::graded);
    for (std::size_t i = 0; i < idx.size(); ++i)
      p.coords[i] = axes[i][idx[i]];
    if (quasi_norm_m(p) <= R + 1e-12)
      out.push_back(std::move(p));
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == axes[i].size())
      idx[i++] = 0;
    if (i == idx.size())
      break;
  }
  return out;
}

struct KappaGrid {
  double radius = 0;
  double step = 0;
  double eps = 0;
  std::uint64_t seed = 0;
  std::vector<GroupPoint<double>> grid;
  std::vector<GroupPoint<double>> reference; // Phi(g) per grid point
  std::vector<std::int64_t> n_list;
  std::vector<std::vector<double>> sup_distance; // [n index][x index]

  ConvergenceReport report() const
  {
    ConvergenceReport rep;
    rep.experiment = "kappa-grid";
    rep.eps = eps;
    for (std::size_t k = 0; k < n_list.size(); ++k)
      rep.rows.push_back(summarize(n_list[k], sup_distance[k], eps, seed));
    return rep;
  }
};

/// kappa_{x,n}(g) = scl(alpha(round(delta_n g), x), n) against Phi(g),
/// sup over a radius-R grid, per sampled x.
inline KappaGrid kappa_grid(const CocycleView& view, const PansuDerivative& phi, std::size_t x_samples,
                            const std::vector<std::int64_t>& n_list, double R, double step, double eps,
                            std::uint64_t seed, std::size_t workers = default_workers())
{
  check_n_list(n_list);
  KappaGrid kg;
  kg.radius = R;
  kg.step = step;
  kg.eps = eps;
  kg.seed = seed;
  kg.n_list = n_list;
  kg.grid = ball_grid(view.source().group(), R, step);
  for (const auto& g : kg.grid)
    kg.reference.push_back(phi.apply(g));
  std::vector<std::vector<Digits>> rounded(n_list.size());
  for (std::size_t k = 0; k < n_list.size(); ++k)
    for (const auto& g : kg.grid)
      rounded[k].push_back(view.source().round_to_digits(
          with_law(dilation(g, static_cast<double>(n_list[k])), Law::original)));
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    const double nd = static_cast<double>(n_list[k]);
    kg.sup_distance.push_back(parallel_map<double>(x_samples, workers, [&](std::size_t i) {
      SampleRng rng(seed, i);
      auto x = view.sample(rng);
      double sup = 0;
      for (std::size_t j = 0; j < kg.grid.size(); ++j)
        sup = std::max(sup, proxy_distance(scl(view.value_point(rounded[k][j], x), nd), kg.reference[j]));
      return sup;
    }));
  }
  return kg;
}

struct Box {
  std::vector<double> lo, hi;

  bool contains(const GroupPoint<double>& x) const
  {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (x.coords[i] < lo[i] || !(x.coords[i] < hi[i]))
        return false;
    return true;
  }
};

struct RecurrenceReport {
  std::vector<std::int64_t> first_n; // per sample, -1 when the horizon was exhausted
  std::int64_t horizon = 0;

  double fraction(std::int64_t within) const
  {
    std::size_t ok = 0;
    for (auto n : first_n)
      ok += n >= 1 && n <= within;
    return first_n.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(first_n.size());
  }
  double fraction() const { return fraction(horizon); }
};

/// All distinct products of at most `length` generators of the lattice.
inline std::vector<Digits> short_words(const Lattice& lattice, int length)
{
  std::set<Digits> seen{Digits(lattice.dim(), 0)};
  std::vector<Digits> layer{Digits(lattice.dim(), 0)};
  for (int l = 0; l < length; ++l) {
    std::vector<Digits> next;
    for (const auto& w : layer)
      for (const auto& s : lattice.spec().generators) {
        auto p = lattice.multiply(w, s);
        if (seen.insert(p).second)
          next.push_back(std::move(p));
      }
    layer = std::move(next);
  }
  return {seen.begin(), seen.end()};
}

/// For x uniform in A: the first n <= horizon with some gamma, d(scl(gamma, n), g) < delta,
/// and gamma . x in A. Candidates are gamma_sequence(g, n) times words of length <= 3.
inline RecurrenceReport recurrence_search(const CocycleView& view, const GroupPoint<double>& g, double delta,
                                          const Box& A, std::int64_t horizon, std::size_t samples,
                                          std::uint64_t seed, std::size_t workers = default_workers())
{
  if (A.lo.size() != view.source().dim() || A.hi.size() != A.lo.size())
    throw std::invalid_argument("recurrence_search: box has wrong dimension");
  for (std::size_t i = 0; i < A.lo.size(); ++i)
    if (!(A.hi[i] > A.lo[i]))
      throw std::invalid_argument("recurrence_search: box must have positive volume");
  const auto& L = view.source();
  const auto fac = horizontal_factorization(g);
  const auto words = short_words(L, 3);
  const auto target = with_law(g, Law::graded);
  std::vector<std::vector<Digits>> candidates(static_cast<std::size_t>(std::max<std::int64_t>(horizon, 0)));
  for (std::int64_t n = 1; n <= horizon; ++n) {
    const auto base = gamma_sequence(L, fac, n);
    for (const auto& w : words) {
      auto c = L.multiply(base, w);
      if (proxy_distance(scl(L.from_digits<double>(c), static_cast<double>(n)), target) < delta)
        candidates[static_cast<std::size_t>(n - 1)].push_back(std::move(c));
    }
  }
  RecurrenceReport rep;
  rep.horizon = horizon;
  rep.first_n = parallel_map<std::int64_t>(samples, workers, [&](std::size_t i) -> std::int64_t {
    SampleRng rng(seed, i);
    auto x = L.group().identity<double>();
    for (std::size_t k = 0; k < x.coords.size(); ++k)
      x.coords[k] = A.lo[k] + rng.uniform() * (A.hi[k] - A.lo[k]);
    for (std::int64_t n = 1; n <= horizon; ++n)
      for (const auto& c : candidates[static_cast<std::size_t>(n - 1)])
        if (A.contains(view.next(c, x)))
          return n;
    return -1;
  });
  return rep;
}

/// Integer exponent schedule a(n) for one letter of a word.
struct Schedule {
  std::string text;
  std::function<std::int64_t(std::int64_t)> fn;
};

/// "n", "<c>n" (floor(c n)) or "sqrtn" (floor(sqrt n)).
inline Schedule parse_schedule(const std::string& text)
{
  if (text == "sqrtn")
    return {text, [](std::int64_t n) { return static_cast<std::int64_t>(std::floor(std::sqrt(static_cast<double>(n)))); }};
  if (!text.empty() && text.back() == 'n') {
    const std::string c = text.substr(0, text.size() - 1);
    double k = 1.0;
    if (!c.empty()) {
      std::size_t used = 0;
      try {
        k = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || !(k > 0))
        throw std::invalid_argument("bad schedule: " + text);
    }
    return {text, [k](std::int64_t n) { return static_cast<std::int64_t>(std::floor(k * static_cast<double>(n))); }};
  }
  throw std::invalid_argument("bad schedule: " + text);
}

struct WordLetter {
  std::size_t generator; // index into the source lattice's generating set
  Schedule schedule;
};

struct ArbitraryRow {
  std::int64_t n = 0;
  std::int64_t scale = 0; // max_i a_{n,i}
  std::size_t samples = 0;
  double median = 0;
};

struct ArbitraryReport {
  std::vector<ArbitraryRow> rows;
  bool decreasing() const
  {
    std::vector<double> m;
    for (const auto& r : rows)
      m.push_back(r.median);
    return stats::strictly_decreasing(m);
  }
};

/// gamma_n = s_1^{a_{n,1}} ... s_k^{a_{n,k}}; distance from alpha(gamma_n, x) to
/// delta_{a_{n,1}}ᾱ_ab(s_1) * ... * delta_{a_{n,k}}ᾱ_ab(s_k), divided by max a_{n,i}.
inline ArbitraryReport arbitrary_element_experiment(const CocycleView& view, const GeneratorImageTable& table,
                                                    const std::vector<WordLetter>& word,
                                                    const std::vector<std::int64_t>& n_list, std::size_t samples,
                                                    std::uint64_t seed, std::size_t workers = default_workers())
{
  check_n_list(n_list);
  if (word.empty())
    throw std::invalid_argument("arbitrary_element_experiment: empty word");
  const auto& L = view.source();
  const auto& H = view.target().group();
  ArbitraryReport rep;
  for (auto n : n_list) {
    Digits gn(L.dim(), 0);
    auto target = H.identity<double>(Law::graded);
    std::int64_t A = 0;
    for (const auto& letter : word) {
      const auto a = letter.schedule.fn(n);
      if (a < 0)
        throw std::invalid_argument("schedule produced a negative exponent");
      A = std::max(A, a);
      gn = L.multiply(gn, L.power_digits(table.generators.at(letter.generator), a));
      target = target * detail::abelian_point(H, table.images.at(letter.generator).mean, static_cast<double>(a));
    }
    if (A == 0)
      throw std::invalid_argument("schedule is zero at n = " + std::to_string(n));
    const double Ad = static_cast<double>(A);
    const auto target_scaled = dilation(target, 1.0 / Ad);
    auto dist = parallel_map<double>(samples, workers, [&](std::size_t i) {
      SampleRng rng(seed, i);
      auto x = view.sample(rng);
      return proxy_distance(scl(view.value_point(gn, x), Ad), target_scaled);
    });
    rep.rows.push_back({n, A, samples, stats::median(dist)});
  }
  return rep;
}

} // namespace nilcone
