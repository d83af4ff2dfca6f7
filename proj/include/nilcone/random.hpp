#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nilcone {

inline std::uint64_t splitmix64(std::uint64_t& state)
{
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of the independent stream for sample `index` under `master`.
/// Streams depend only on (master, index), never on the worker layout.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index)
{
  std::uint64_t s = master ^ 0x6A09E667F3BCC909ULL;
  std::uint64_t a = splitmix64(s);
  std::uint64_t t = index + a;
  return splitmix64(t);
}

/// SplitMix64 stream; satisfies UniformRandomBitGenerator.
class SampleRng {
public:
  using result_type = std::uint64_t;
  explicit SampleRng(std::uint64_t seed) : state_(seed) {}
  SampleRng(std::uint64_t master, std::uint64_t index) : state_(split_seed(master, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  result_type operator()() { return splitmix64(state_); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

inline std::size_t default_workers()
{
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

/// out[i] = fn(i) for i in [0, count), evaluated on `workers` threads over
/// contiguous chunks. Output order is the index order.
template <typename R, typename Fn> std::vector<R> parallel_map(std::size_t count, std::size_t workers, Fn&& fn)
{
  std::vector<R> out(count);
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i)
      out[i] = fn(i);
    return out;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i)
          out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err)
          err = std::current_exception();
      }
    });
  }
  for (auto& t : pool)
    t.join();
  if (err)
    std::rethrow_exception(err);
  return out;
}

} // namespace nilcone
