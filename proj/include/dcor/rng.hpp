#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace dcor {

// splitmix64 step; used to derive independent substream seeds from one master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic random source. The distributions are hand-rolled on top of
// mt19937_64 so that identical seeds give identical streams on every
// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; consumes two uniforms per call, no cached spare.
  double normal(double mean, double stddev) {
    const double u = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double v = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double two_pi = 6.283185307179586476925286766559;
    return mean + stddev * r * std::cos(two_pi * v);
  }

  // Uniform integer in [0, n); unbiased via rejection.
  int uniform_int(int n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t bound = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x = next_u64();
    while (x >= bound) x = next_u64();
    return static_cast<int>(x % un);
  }

  // Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[static_cast<std::size_t>(uniform_int(i + 1))]);
    }
  }

  // k distinct values drawn uniformly from `pool` (partial Fisher-Yates).
  template <class T>
  std::vector<T> sample(std::vector<T> pool, int k) {
    std::vector<T> out;
    out.reserve(k);
    int m = static_cast<int>(pool.size());
    for (int i = 0; i < k && m > 0; ++i, --m) {
      const int j = uniform_int(m);
      out.push_back(pool[static_cast<std::size_t>(j)]);
      std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(m - 1)]);
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dcor
