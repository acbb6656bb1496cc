#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>

#include "mczsl/real.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

/// Seeded generator: std::mt19937_64 (period 2^19937 - 1), whose output
/// sequence is fixed by the C++ standard. All distributions are implemented
/// here rather than taken from <random>, whose distribution algorithms vary
/// between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) by rejection; n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Standard normal via the Box-Muller transform.
  double normal();

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

  /// Independent child generator for a named stream.
  Rng split(std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
