#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace snls {

// Counter-based random numbers built on the splitmix64 output function.
// Streams are keyed by (seed, step_index), so two runs with the same seed
// consume identical increments at identical step indices regardless of any
// other parameter (the common-random-numbers contract). Everything here is
// bit-reproducible across platforms: no std:: distributions involved.

namespace rng_detail {

constexpr std::uint64_t GAMMA = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace rng_detail

// One stream = one (key, counter) pair; next_u64 is stateless in everything
// except the counter.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(rng_detail::mix64(seed + rng_detail::GAMMA) ^
             rng_detail::mix64(stream_id * rng_detail::GAMMA + 0x632BE59BD9B4E019ull)),
        counter_(0) {}

  std::uint64_t next_u64() {
    return rng_detail::mix64(key_ + (++counter_) * rng_detail::GAMMA);
  }

  // Uniform in (0, 1]: never zero, so safe under log().
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
  }

  // Standard normal via Box-Muller (pairs drawn eagerly, second value cached).
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Per-path noise source: hands out one fresh RngStream per step index.
struct PathRng {
  std::uint64_t seed = 0;
  std::uint64_t step_index = 0;

  RngStream stream_for_step() const { return RngStream(seed, step_index); }
  void advance() { ++step_index; }
};

}  // namespace snls
