#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace anchorrank {

/// Seeded generator with platform-independent derived draws.
///
/// std::uniform_*_distribution results differ between standard libraries, so
/// the derived draws here are computed from the raw mt19937_64 stream.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on {0, ..., n-1}; n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return x % n;
  }

  bool coin() { return (engine_() >> 63) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  /// Independent child stream keyed by `salt`.
  Rng fork(std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(next()), static_cast<std::uint32_t>(salt),
                      static_cast<std::uint32_t>(salt >> 32)};
    Rng child;
    child.engine_.seed(seq);
    return child;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace anchorrank
