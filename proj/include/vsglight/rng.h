#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "vsglight/math.h"

namespace vsg {

// All randomness flows from one config seed through named sub-streams, so
// independent consumers (sampling, optimizer, tests) never share state.
// Distribution helpers are hand-rolled: std::uniform_*_distribution output is
// not pinned by the standard, and results must be reproducible everywhere.
class Rng {
 public:
  Rng(uint64_t seed, std::string_view stream, uint64_t index = 0)
      : gen_(mix(seed, stream, index)) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % span;
    uint64_t r;
    do { r = gen_(); } while (r >= limit);
    return lo + static_cast<int64_t>(r % span);
  }

  Vec3 unit_vector() {
    double z = uniform(-1.0, 1.0);
    double a = uniform(0.0, 2.0 * M_PI);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(a), r * std::sin(a), z};
  }

  // Distinct indices drawn from [0, n), in sampling order (partial Fisher-Yates).
  std::vector<int64_t> sample_without_replacement(int64_t n, int64_t k);

 private:
  static uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (char c : s) { h ^= static_cast<unsigned char>(c); h *= 1099511628211ull; }
    return h;
  }
  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }
  static uint64_t mix(uint64_t seed, std::string_view stream, uint64_t index) {
    return splitmix(splitmix(seed ^ fnv1a(stream)) ^ index);
  }

  std::mt19937_64 gen_;
};

inline std::vector<int64_t> Rng::sample_without_replacement(int64_t n, int64_t k) {
  if (k > n) k = n;
  std::vector<int64_t> pool(n);
  for (int64_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<int64_t> out(k);
  for (int64_t i = 0; i < k; ++i) {
    int64_t j = uniform_int(i, n - 1);
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
  return out;
}

}  // namespace vsg
