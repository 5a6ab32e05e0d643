#include "examkit/rng.hpp"

#include <cmath>

namespace examkit {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ b);
}

PhiloxRng::PhiloxRng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t key = mix64(seed, stream);
  key_[0] = static_cast<std::uint32_t>(key);
  key_[1] = static_cast<std::uint32_t>(key >> 32);
}

void PhiloxRng::set_block(std::uint64_t block) {
  counter_[0] = 0;
  counter_[1] = 0;
  counter_[2] = static_cast<std::uint32_t>(block);
  counter_[3] = static_cast<std::uint32_t>(block >> 32);
  out_pos_ = 4;
  have_spare_normal_ = false;
}

void PhiloxRng::refill() {
  std::array<std::uint32_t, 4> ctr = counter_;
  std::array<std::uint32_t, 2> key = key_;
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  out_ = ctr;
  out_pos_ = 0;
  if (++counter_[0] == 0) ++counter_[1];
}

std::uint32_t PhiloxRng::next_u32() {
  if (out_pos_ >= 4) refill();
  return out_[out_pos_++];
}

std::uint64_t PhiloxRng::next_u64() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double PhiloxRng::uniform() {
  // 53-bit mantissa, shifted off the exact endpoints
  const std::uint64_t bits = next_u64() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double PhiloxRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double PhiloxRng::normal() {
  if (have_spare_normal_) {
    have_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * M_PI * u2;
  spare_normal_ = r * std::sin(phi);
  have_spare_normal_ = true;
  return r * std::cos(phi);
}

}  // namespace examkit
