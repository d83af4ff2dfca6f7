#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nilcone/geometry.hpp"
#include "nilcone/lattice.hpp"
#include "nilcone/random.hpp"

namespace nilcone {

inline constexpr std::size_t kDefaultStateCap = 10'000'000;
inline constexpr int kDefaultRadiusCap = 25;

class CapExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

__extension__ typedef unsigned __int128 StateKey;
inline constexpr int kDigitBits = 21;
inline constexpr std::int64_t kDigitOffset = std::int64_t(1) << (kDigitBits - 1);

inline StateKey encode_digits(const Digits& k)
{
  if (k.size() * kDigitBits > 128)
    throw CapExceeded("BFS key: dimension too large");
  StateKey key = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const std::int64_t v = k[i] + kDigitOffset;
    if (v < 0 || v >= 2 * kDigitOffset)
      throw CapExceeded("BFS key: digit out of packable range");
    key |= static_cast<StateKey>(v) << (kDigitBits * i);
  }
  return key;
}

inline Digits decode_digits(StateKey key, std::size_t m)
{
  Digits k(m);
  const StateKey mask = (StateKey(1) << kDigitBits) - 1;
  for (std::size_t i = 0; i < m; ++i)
    k[i] = static_cast<std::int64_t>((key >> (kDigitBits * i)) & mask) - kDigitOffset;
  return k;
}

struct StateKeyHash {
  std::size_t operator()(StateKey k) const
  {
    std::uint64_t s = static_cast<std::uint64_t>(k) ^ (static_cast<std::uint64_t>(k >> 64) * 0x9E3779B97F4A7C15ULL);
    return static_cast<std::size_t>(splitmix64(s));
  }
};

inline Digits round_digits(const std::vector<double>& k)
{
  Digits out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    out[i] = static_cast<std::int64_t>(std::nearbyint(k[i]));
    if (std::fabs(k[i] - static_cast<double>(out[i])) > 1e-6)
      throw std::runtime_error("BFS: lattice digits drifted from integers");
  }
  return out;
}

} // namespace detail

/// Breadth-first ball in the Cayley graph of a lattice w.r.t. its generating set.
class CayleyBall {
public:
  CayleyBall(const Lattice& lattice, int radius, std::size_t state_cap = kDefaultStateCap,
             std::optional<Digits> stop_at = std::nullopt)
      : lattice_(&lattice)
  {
    const std::size_t m = lattice.dim();
    const auto origin = Digits(m, 0);
    dist_.reserve(1024);
    dist_.emplace(detail::encode_digits(origin), 0);
    sphere_sizes_.push_back(1);
    sphere_max_.push_back(std::vector<double>(m, 0.0));
    std::vector<std::pair<detail::StateKey, GroupPoint<double>>> frontier{
        {detail::encode_digits(origin), lattice.group().identity<double>()}};
    if (stop_at && *stop_at == origin) {
      radius_ = 0;
      return;
    }
    for (int n = 1; n <= radius; ++n) {
      std::vector<std::pair<detail::StateKey, GroupPoint<double>>> next;
      std::vector<double> mx(m, 0.0);
      bool hit = false;
      for (const auto& [key, g] : frontier) {
        for (std::size_t s = 0; s < lattice.num_generators(); ++s) {
          auto h = g * lattice.generator<double>(s);
          auto k = detail::round_digits(lattice.digits(h));
          auto nk = detail::encode_digits(k);
          if (!dist_.emplace(nk, static_cast<std::uint16_t>(n)).second)
            continue;
          if (dist_.size() > state_cap)
            throw CapExceeded("BFS state cap of " + std::to_string(state_cap) + " exceeded at radius " +
                              std::to_string(n));
          for (std::size_t i = 0; i < m; ++i)
            mx[i] = std::max(mx[i], std::fabs(h.coords[i]));
          hit = hit || (stop_at && k == *stop_at);
          next.emplace_back(nk, std::move(h));
        }
      }
      sphere_sizes_.push_back(next.size());
      sphere_max_.push_back(std::move(mx));
      frontier = std::move(next);
      radius_ = n;
      if (hit)
        break;
    }
  }

  const Lattice& lattice() const { return *lattice_; }
  int radius() const { return radius_; }
  std::size_t size() const { return dist_.size(); }

  std::optional<int> distance(const Digits& k) const
  {
    auto it = dist_.find(detail::encode_digits(k));
    if (it == dist_.end())
      return std::nullopt;
    return static_cast<int>(it->second);
  }

  std::optional<int> distance(const GroupPoint<Rational>& g) const { return distance(lattice_->integer_digits(g)); }

  const std::vector<std::size_t>& sphere_sizes() const { return sphere_sizes_; }

  /// max |log coordinate i| over the sphere of radius n
  const std::vector<std::vector<double>>& sphere_max_abs() const { return sphere_max_; }

  template <typename Fn> void for_each(Fn&& fn) const
  {
    for (const auto& [key, d] : dist_)
      fn(detail::decode_digits(key, lattice_->dim()), static_cast<int>(d));
  }

private:
  const Lattice* lattice_;
  int radius_ = 0;
  std::unordered_map<detail::StateKey, std::uint16_t, detail::StateKeyHash> dist_;
  std::vector<std::size_t> sphere_sizes_;
  std::vector<std::vector<double>> sphere_max_;
};

/// Ball cache keyed by (lattice, radius); entries are immutable once built.
inline const CayleyBall& cached_ball(const Lattice& lattice, int radius, std::size_t cap = kDefaultStateCap)
{
  static std::mutex mu;
  static std::map<std::pair<const Lattice*, int>, std::unique_ptr<CayleyBall>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{&lattice, radius}];
  if (!slot)
    slot = std::make_unique<CayleyBall>(lattice, radius, cap);
  return *slot;
}

/// Exact word length of a lattice point, or nullopt beyond radius_cap.
inline std::optional<int> word_norm_bfs(const Lattice& lattice, const GroupPoint<Rational>& g,
                                        int radius_cap = kDefaultRadiusCap, std::size_t cap = kDefaultStateCap)
{
  auto target = lattice.integer_digits(g); // throws if g is not a lattice point
  CayleyBall ball(lattice, radius_cap, cap, target);
  return ball.distance(target);
}

struct BallProfileRow {
  int n;
  std::size_t ball_size;
  std::vector<double> max_coord; // max |log coordinate i| over B(n)
};

inline std::vector<BallProfileRow> ball_profile(const CayleyBall& ball)
{
  std::vector<BallProfileRow> rows;
  std::size_t total = 0;
  std::vector<double> mx(ball.lattice().dim(), 0.0);
  for (int n = 0; n <= ball.radius(); ++n) {
    total += ball.sphere_sizes()[static_cast<std::size_t>(n)];
    for (std::size_t i = 0; i < mx.size(); ++i)
      mx[i] = std::max(mx[i], ball.sphere_max_abs()[static_cast<std::size_t>(n)][i]);
    rows.push_back({n, total, mx});
  }
  return rows;
}

inline std::vector<BallProfileRow> ball_profile(const Lattice& lattice, int radius, std::size_t cap = kDefaultStateCap)
{
  return ball_profile(cached_ball(lattice, radius, cap));
}

struct GuivarchConstants {
  int radius = 0;
  double c_low = 0;           // |g|_m / c_low <= |g|_Gamma
  double c_high = 0;          // |g|_Gamma <= c_high |g|_m + c_high
  double com_ratio = 0;       // max |round(pi_com g)|_Gamma / |g|_Gamma
  std::size_t com_missing = 0; // commutator parts beyond the explored ball
};

/// Empirical sandwich constants over B(radius); `ball` must cover at least
/// `radius` (and further if the commutator ratio should be complete).
inline GuivarchConstants guivarch_constants(const CayleyBall& ball, int radius)
{
  if (radius > ball.radius())
    throw std::invalid_argument("guivarch_constants: radius exceeds explored ball");
  const Lattice& lat = ball.lattice();
  GuivarchConstants out;
  out.radius = radius;
  ball.for_each([&](const Digits& k, int d) {
    if (d > radius)
      return;
    auto g = lat.from_digits<double>(k);
    const double q = quasi_norm_m(g);
    out.c_high = std::max(out.c_high, d / (q + 1.0));
    if (d == 0)
      return;
    out.c_low = std::max(out.c_low, q / d);
    auto com = lat.round_to_lattice(pi_com(g));
    auto w = ball.distance(detail::round_digits(lat.digits(com)));
    if (w)
      out.com_ratio = std::max(out.com_ratio, static_cast<double>(*w) / d);
    else
      ++out.com_missing;
  });
  return out;
}

struct CcEstimate {
  double value = 0;
  bool fallback = false; // true when the BFS ball was too small and the quasi-norm was used
};

enum class CcMode { scaled_word, quasi_norm };

/// (1/n) |round(delta_n(g^{-1} * h))|_Gamma, a proxy for d_infinity(g, h).
inline CcEstimate approx_cc_distance(const CayleyBall& ball, const GroupPoint<double>& g, const GroupPoint<double>& h,
                                     int n, CcMode mode = CcMode::scaled_word)
{
  if (n < 1)
    throw std::invalid_argument("approx_cc_distance: n must be >= 1");
  auto diff = inverse(with_law(g, Law::graded)) * with_law(h, Law::graded);
  if (mode == CcMode::quasi_norm)
    return {quasi_norm_m(diff), false};
  const Lattice& lat = ball.lattice();
  auto scaled = with_law(dilation(diff, static_cast<double>(n)), Law::original);
  auto gamma = lat.round_to_lattice(scaled);
  auto w = ball.distance(detail::round_digits(lat.digits(gamma)));
  if (!w)
    return {quasi_norm_m(diff), true};
  return {static_cast<double>(*w) / n, false};
}

} // namespace nilcone
