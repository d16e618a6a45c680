#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace traitscore {

// Deterministic RNG used by every seeded operation (splits, k-means init,
// fixture generation, jitter). mt19937_64 output is pinned by the standard;
// the bounded/real draws below are hand-rolled because std::*_distribution
// results are implementation-defined and would break cross-platform
// reproducibility of seeded runs.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased draw in [0, bound) via rejection sampling. bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t raw;
    do {
      raw = engine_();
    } while (raw >= limit);
    return raw % bound;
  }

  // Uniform double in [0, 1) with 53 bits of precision.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // k distinct indices drawn from [0, n), in draw order.
  std::vector<std::size_t> sample_distinct(std::size_t k, std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace traitscore
