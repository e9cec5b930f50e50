#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace tokspace {

// Philox4x64-10 (Salmon et al., Random123): a counter-based generator. One
// call maps (counter, key) to four 64-bit words with no hidden state, so any
// stream position can be reproduced independently of execution order.
struct Philox4x64 {
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static Counter block(Counter counter, Key key);
};

// A stream of Philox blocks keyed by (seed, stream id). Sample i of an
// estimator draws from stream i, which makes parallel runs reproduce serial
// ones bit for bit. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_{seed, stream} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer in [0, bound) by rejection, bound > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  Philox4x64::Key key_;
  std::uint64_t block_index_ = 0;
  Philox4x64::Counter buffer_{};
  unsigned used_ = 4;
};

// Mixes several identifiers into one stream id (SplitMix64 finalizer chain).
std::uint64_t derive_stream(std::uint64_t a, std::uint64_t b = 0,
                            std::uint64_t c = 0);

}  // namespace tokspace
