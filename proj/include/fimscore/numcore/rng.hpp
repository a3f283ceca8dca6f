#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fimscore {

// PCG32 (XSH-RR output, 64-bit LCG state) after O'Neill's reference
// implementation. A generator is identified by (seed, stream); distinct
// streams use distinct LCG increments and therefore never coincide.
//
// Child streams: split() draws two 64-bit words from the parent and uses them
// as (seed, stream) of the child. for_stream(seed, k) is the keyed variant used
// when a caller needs the k-th independent stream of a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  static Rng for_stream(std::uint64_t seed, std::uint64_t stream_id) { return Rng(seed, stream_id); }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, bound) without modulo bias. bound must be > 0.
  std::uint32_t bounded(std::uint32_t bound);
  // Standard normal by Box-Muller; consumes two uniforms per draw.
  double normal();

  // Jump ahead by delta steps in O(log delta).
  void advance(std::uint64_t delta);

  Rng split();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(bounded(static_cast<std::uint32_t>(i)));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

  // Seeded sample of k distinct indices from [0, n) in ascending order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  std::uint64_t state() const { return state_; }
  std::uint64_t increment() const { return inc_; }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
};

}  // namespace fimscore
