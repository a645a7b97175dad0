#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace hylda {

// Counter-based generator (splitmix64). The algorithm is fixed and fully
// specified here so a given seed reproduces the same draw sequence on every
// platform. Handles are single-owner: parallel workers get independently
// derived handles, never a shared one.
class RngHandle {
 public:
  explicit RngHandle(uint64_t seed) : seed_(seed), state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n); n must be positive.
  uint32_t next_below(uint32_t n);

  // Child handle for a named sub-stream. Depends only on the constructor
  // seed, not on how many draws this handle has produced.
  RngHandle derive(uint64_t stream) const;

  uint64_t seed() const { return seed_; }

  // Raw counter access, used by checkpointing to resume mid-stream.
  uint64_t raw_state() const { return state_; }
  void set_raw_state(uint64_t s) { state_ = s; }

 private:
  uint64_t seed_;
  uint64_t state_;
};

// Draws index k with probability weights[k] / sum(weights) by inverting the
// cumulative distribution; consumes exactly one uniform. Throws
// std::invalid_argument if weights are empty, contain NaN or negatives, or
// sum to zero.
size_t sample_categorical(std::span<const double> weights, RngHandle& rng);

double sample_normal(RngHandle& rng);

// Marsaglia-Tsang; supports any shape > 0, unit scale.
double sample_gamma(double shape, RngHandle& rng);

void sample_dirichlet(std::span<const double> alpha, RngHandle& rng,
                      std::span<double> out);

}  // namespace hylda
