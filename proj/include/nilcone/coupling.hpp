#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nilcone/catalog.hpp"
#include "nilcone/lattice.hpp"
#include "nilcone/random.hpp"
#include "nilcone/stats.hpp"
#include "nilcone/word_metric.hpp"

namespace nilcone {

class CouplingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Linear map on adapted log coordinates; matrix[i][j] is the coefficient of
/// X_i in the image of X_j.
struct AutomorphismSpec {
  std::string name;
  RationalMatrix matrix;
};

template <typename T> std::vector<T> apply_matrix(const RationalMatrix& M, const std::vector<T>& v)
{
  std::vector<T> out(v.size(), T(0));
  for (std::size_t i = 0; i < M.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j)
      if (M[i][j] != 0) {
        if constexpr (ScalarTraits<T>::exact)
          out[i] += M[i][j] * v[j];
        else
          out[i] += M[i][j].get_d() * v[j];
      }
  return out;
}

/// Throws CouplingError unless M is a Lie algebra automorphism of the original
/// bracket, lower triangular with positive diagonal, and maps every
/// coordinate generator of `lattice` into the lattice.
inline void validate_twist(const AutomorphismSpec& tw, const Lattice& lattice)
{
  const NilpotentGroup& G = lattice.group();
  const std::size_t m = G.dim();
  const auto& M = tw.matrix;
  if (M.size() != m)
    throw CouplingError("twist '" + tw.name + "': matrix must be " + std::to_string(m) + "x" + std::to_string(m));
  for (const auto& row : M)
    if (row.size() != m)
      throw CouplingError("twist '" + tw.name + "': matrix must be square");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(M[i][i] > 0))
      throw CouplingError("twist '" + tw.name + "': diagonal must be positive");
    for (std::size_t j = i + 1; j < m; ++j)
      if (M[i][j] != 0)
        throw CouplingError("twist '" + tw.name + "': matrix must be lower triangular");
  }
  const auto& c = G.constants(Law::original);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      auto ea = unit_vector(m, a), eb = unit_vector(m, b);
      auto lhs = apply_matrix(M, bracket(c, ea, eb));
      auto rhs = bracket(c, apply_matrix(M, ea), apply_matrix(M, eb));
      if (lhs != rhs)
        throw CouplingError("twist '" + tw.name + "' is not an automorphism: fails on [X" + std::to_string(a + 1) +
                            ", X" + std::to_string(b + 1) + "]");
    }
  for (std::size_t i = 0; i < m; ++i) {
    auto u = lattice.coordinate_generator<Rational>(i);
    if (!lattice.contains(G.point(apply_matrix(M, u.coords))))
      throw CouplingError("twist '" + tw.name + "' does not map u_" + std::to_string(i + 1) + " into the lattice");
  }
}

template <typename T> struct DomainReduction {
  GroupPoint<T> x; // representative in the box
  Digits lattice;  // digits of the group element that moved omega there
};

template <typename T> struct CocycleValue {
  Digits value;     // alpha(gamma, x) in Lambda, or beta(lambda, y) in Gamma
  GroupPoint<T> next; // gamma . x (resp. lambda . y) in the same domain
};

enum class DomainSide { X, Y };

/// Omega = G with Gamma acting on the left and Lambda on the right through
/// iota = twist^{-1}: lambda . omega = omega iota(lambda)^{-1}. X is the box
/// prod [0, c_i) for the right action, Y the box prod [0, eta_i) for the left.
class Coupling {
public:
  Coupling(std::string name, const Lattice& gamma, const Lattice& lambda, std::optional<AutomorphismSpec> twist)
      : name_(std::move(name)), gamma_(&gamma), lambda_(&lambda), twist_(std::move(twist))
  {
    if (&gamma.group() != &lambda.group())
      throw CouplingError("coupling '" + name_ + "': lattices live in different groups");
    const std::size_t m = gamma.dim();
    iota_ = twist_ ? inverse(twist_->matrix) : identity_matrix(m);
    if (twist_)
      validate_twist(*twist_, lambda);
    for (std::size_t i = 0; i < m; ++i) {
      auto v = iota(lambda.coordinate_generator<Rational>(i));
      edge_q_.push_back(v.coords[i]);
      edge_d_.push_back(v.coords[i].get_d());
      v_q_.push_back(v);
      v_d_.push_back(convert<double>(v));
    }
  }

  const std::string& name() const { return name_; }
  const NilpotentGroup& group() const { return gamma_->group(); }
  const Lattice& gamma_lattice() const { return *gamma_; }
  const Lattice& lambda_lattice() const { return *lambda_; }
  const std::optional<AutomorphismSpec>& twist() const { return twist_; }
  std::size_t dim() const { return gamma_->dim(); }

  /// Side lengths of X.
  const std::vector<double>& x_box() const { return edge_d_; }

  /// iota(lambda) as a point of G.
  template <typename T> GroupPoint<T> iota(const GroupPoint<T>& lambda) const
  {
    return {lambda.group, Law::original, apply_matrix(iota_, lambda.coords)};
  }

  template <typename T> GroupPoint<T> gamma_point(const Digits& k) const { return gamma_->from_digits<T>(k); }
  template <typename T> GroupPoint<T> lambda_point(const Digits& k) const { return lambda_->from_digits<T>(k); }

  /// Left action of gamma on Omega.
  template <typename T> GroupPoint<T> act_gamma(const Digits& gamma, const GroupPoint<T>& omega) const
  {
    return gamma_point<T>(gamma) * omega;
  }

  /// Right action of lambda on Omega: omega iota(lambda)^{-1}.
  template <typename T> GroupPoint<T> act_lambda(const Digits& lambda, const GroupPoint<T>& omega) const
  {
    return omega * inverse(convert<T>(iota(lambda_point<Rational>(lambda))));
  }

  /// Right peeling with the floor convention: returns x = omega v_1^{-k_1} ... v_m^{-k_m}
  /// in X, where v_i = iota(u_i).
  template <typename T> GroupPoint<T> peel_right(GroupPoint<T> h, Digits* digits = nullptr) const
  {
    h.law = Law::original;
    const std::size_t m = dim();
    Digits k(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      k[i] = ScalarTraits<T>::floor_int(h.coords[i] / edge<T>(i));
      if (k[i] != 0)
        h = h * power(v<T>(i), -k[i]);
    }
    if (digits)
      *digits = std::move(k);
    return h;
  }

  /// The unique lambda with lambda . omega in X.
  template <typename T> DomainReduction<T> reduce_to_domain(const GroupPoint<T>& omega) const
  {
    Digits k;
    auto x = peel_right(omega, &k);
    // omega = x v_m^{k_m} ... v_1^{k_1}, so lambda = u_m^{k_m} ... u_1^{k_1}
    auto lam = lambda_->group().identity<Rational>();
    for (std::size_t i = k.size(); i-- > 0;)
      if (k[i] != 0)
        lam = lam * lambda_->coordinate_power<Rational>(i, k[i]);
    return {std::move(x), lambda_->integer_digits(lam)};
  }

  /// omega = gamma y with y in Y; returns y and the digits of gamma.
  template <typename T> DomainReduction<T> reduce_left(const GroupPoint<T>& omega) const
  {
    auto r = gamma_->reduce_left(omega);
    return {std::move(r.remainder), std::move(r.digits)};
  }

  template <typename T> bool in_x(const GroupPoint<T>& x) const
  {
    for (std::size_t i = 0; i < dim(); ++i)
      if (x.coords[i] < 0 || !(x.coords[i] < edge<T>(i)))
        return false;
    return true;
  }

  template <typename T> bool in_y(const GroupPoint<T>& y) const { return gamma_->in_box(y); }

  /// alpha(gamma, x): gamma x = x' iota(alpha) with x' in X.
  template <typename T> CocycleValue<T> alpha(const Digits& gamma, const GroupPoint<T>& x) const
  {
    auto r = reduce_to_domain(act_gamma(gamma, x));
    return {std::move(r.lattice), std::move(r.x)};
  }

  /// beta(lambda, y): y iota(lambda)^{-1} = beta^{-1} y' with y' in Y.
  template <typename T> CocycleValue<T> beta(const Digits& lambda, const GroupPoint<T>& y) const
  {
    auto r = reduce_left(act_lambda(lambda, y));
    auto g = gamma_->from_digits<Rational>(r.lattice);
    return {gamma_->integer_digits(inverse(g)), std::move(r.x)};
  }

  template <typename T> GroupPoint<T> induced_action(const Digits& gamma, const GroupPoint<T>& x) const
  {
    return peel_right(act_gamma(gamma, x));
  }

  template <typename T> GroupPoint<T> induced_action_y(const Digits& lambda, const GroupPoint<T>& y) const
  {
    return beta(lambda, y).next;
  }

  /// Haar-uniform sample of X (or Y).
  GroupPoint<double> sample_domain(SampleRng& rng, DomainSide side = DomainSide::X) const
  {
    auto p = group().identity<double>();
    for (std::size_t i = 0; i < dim(); ++i)
      p.coords[i] = rng.uniform() * (side == DomainSide::X ? edge_d_[i] : static_cast<double>(gamma_->divisor(i)));
    return p;
  }

  /// Product and inverse in Gamma (resp. Lambda), on digits.
  Digits gamma_mul(const Digits& a, const Digits& b) const { return gamma_->multiply(a, b); }
  Digits gamma_inv(const Digits& a) const { return gamma_->inverse_digits(a); }
  Digits gamma_pow(const Digits& a, std::int64_t n) const { return gamma_->power_digits(a, n); }
  Digits lambda_mul(const Digits& a, const Digits& b) const { return lambda_->multiply(a, b); }

private:
  template <typename T> const T& edge(std::size_t i) const
  {
    if constexpr (std::is_same_v<T, Rational>)
      return edge_q_[i];
    else
      return edge_d_[i];
  }
  template <typename T> const GroupPoint<T>& v(std::size_t i) const
  {
    if constexpr (std::is_same_v<T, Rational>)
      return v_q_[i];
    else
      return v_d_[i];
  }

  std::string name_;
  const Lattice* gamma_;
  const Lattice* lambda_;
  std::optional<AutomorphismSpec> twist_;
  RationalMatrix iota_;
  std::vector<Rational> edge_q_;
  std::vector<double> edge_d_;
  std::vector<GroupPoint<Rational>> v_q_; // iota(u_i)
  std::vector<GroupPoint<double>> v_d_;
};

/// Named twists of heisenberg3: scale2 is X1 -> 2X1, X3 -> 2X3; shear is X1 -> X1 + X3.
inline AutomorphismSpec builtin_twist(const std::string& group, const std::string& twist)
{
  if (group != "heisenberg3")
    throw CouplingError("twist '" + twist + "' is only defined for heisenberg3");
  RationalMatrix M = identity_matrix(3);
  if (twist == "scale2") {
    M[0][0] = 2;
    M[2][2] = 2;
  } else if (twist == "shear") {
    M[2][0] = 1;
  } else {
    throw CouplingError("unknown twist: " + twist);
  }
  return {twist, M};
}

struct CouplingConfig {
  std::string group;
  std::optional<std::string> twist;
  std::string domain = "malcev_box";
};

inline std::string coupling_name(const CouplingConfig& cfg)
{
  std::string g = cfg.group == "heisenberg3" ? "heisenberg" : cfg.group;
  return g + "-" + cfg.twist.value_or("identity");
}

/// "heisenberg-identity", "heisenberg-scale2", "heisenberg-shear",
/// "abelian2-identity", and "<group>-identity" for any built-in group.
inline CouplingConfig parse_coupling_name(const std::string& name)
{
  const auto dash = name.rfind('-');
  if (dash == std::string::npos)
    throw CouplingError("unknown coupling: " + name);
  CouplingConfig cfg;
  cfg.group = name.substr(0, dash);
  if (cfg.group == "heisenberg")
    cfg.group = "heisenberg3";
  const std::string tw = name.substr(dash + 1);
  if (tw != "identity")
    cfg.twist = tw;
  bool known = false;
  for (const auto& n : catalog::algebra_names())
    known = known || n == cfg.group;
  if (!known)
    throw CouplingError("unknown coupling: " + name);
  return cfg;
}

inline const std::vector<std::string>& builtin_coupling_names()
{
  static const std::vector<std::string> names{"heisenberg-identity", "heisenberg-scale2", "heisenberg-shear",
                                              "abelian2-identity"};
  return names;
}

inline const Coupling& coupling(const CouplingConfig& cfg)
{
  if (cfg.domain != "malcev_box")
    throw CouplingError("unsupported domain convention: " + cfg.domain);
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<Coupling>> cache;
  const std::string name = coupling_name(cfg);
  const Lattice& lat = catalog::lattice(cfg.group);
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[name];
  if (!slot) {
    std::optional<AutomorphismSpec> tw;
    if (cfg.twist)
      tw = builtin_twist(cfg.group, *cfg.twist);
    slot = std::make_unique<Coupling>(name, lat, lat, std::move(tw));
  }
  return *slot;
}

inline const Coupling& builtin_coupling(const std::string& name) { return coupling(parse_coupling_name(name)); }

/// Word norm in Lambda: exact from a cached BFS ball, else c_high (|g|_m + 1).
class WordNormOracle {
public:
  explicit WordNormOracle(const Lattice& lattice, int radius = 12, std::size_t cap = kDefaultStateCap)
      : ball_(&cached_ball(lattice, radius, cap)), c_high_(guivarch_constants(*ball_, radius).c_high)
  {
  }

  double operator()(const Digits& k, bool* exact = nullptr) const
  {
    if (auto d = ball_->distance(k)) {
      if (exact)
        *exact = true;
      return *d;
    }
    if (exact)
      *exact = false;
    return c_high_ * (quasi_norm_m(ball_->lattice().from_digits<double>(k)) + 1.0);
  }

  const CayleyBall& ball() const { return *ball_; }

private:
  const CayleyBall* ball_;
  double c_high_;
};

struct IntegrabilityReport {
  std::size_t generator = 0;
  double mean_norm = 0;
  double ci_low = 0;
  double ci_high = 0;
  double max_norm = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::size_t fallbacks = 0; // values beyond the BFS ball
};

/// Monte Carlo mean of |alpha(gamma, .)|_Lambda over X.
inline IntegrabilityReport integrability_estimate(const Coupling& c, const Digits& gamma, std::size_t samples,
                                                  std::uint64_t seed, const WordNormOracle& norm,
                                                  std::size_t workers = default_workers())
{
  struct Row {
    double v = 0;
    bool exact = true;
  };
  auto rows = parallel_map<Row>(samples, workers, [&](std::size_t i) {
    SampleRng rng(seed, i);
    auto x = c.sample_domain(rng);
    Row r;
    r.v = norm(c.alpha(gamma, x).value, &r.exact);
    return r;
  });
  std::vector<double> v;
  IntegrabilityReport rep;
  for (const auto& r : rows) {
    v.push_back(r.v);
    rep.max_norm = std::max(rep.max_norm, r.v);
    rep.fallbacks += !r.exact;
  }
  auto ci = stats::mean_ci(v);
  rep.mean_norm = ci.mean;
  rep.ci_low = ci.low();
  rep.ci_high = ci.high();
  rep.samples = samples;
  rep.seed = seed;
  return rep;
}

inline IntegrabilityReport integrability_estimate(const Coupling& c, std::size_t generator, std::size_t samples,
                                                  std::uint64_t seed, const WordNormOracle& norm,
                                                  std::size_t workers = default_workers())
{
  const auto& gens = c.gamma_lattice().spec().generators;
  auto rep = integrability_estimate(c, gens.at(generator), samples, seed, norm, workers);
  rep.generator = generator;
  return rep;
}

} // namespace nilcone
