#pragma once

#include <array>
#include <cstdint>

namespace examkit {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Draws are a pure function of (key, counter), so streams keyed by
// (seed, stream id) are reproducible regardless of thread schedule, and
// per-iteration sub-streams can be addressed directly via set_block().
class PhiloxRng {
 public:
  PhiloxRng(std::uint64_t seed, std::uint64_t stream);

  // Positions the generator at the start of a 2^64-draw block. Used to key
  // sampler iterations: block = iteration index, draws consumed sequentially.
  void set_block(std::uint64_t block);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1).
  double uniform();
  // Uniform on (lo, hi).
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller. Consumes two uniforms per pair; the
  // spare value is cached until the next set_block().
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> out_{};
  int out_pos_ = 4;
  bool have_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// 64-bit mix used to derive stream keys from composite identifiers.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

}  // namespace examkit
