#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace segarena {

/// Deterministic PCG32 generator with explicit two-word state.
///
/// Every stochastic component in the project draws from an instance of this
/// class; there is no ambient RNG. The state serializes to two integers, so
/// run manifests and checkpoints can replay any stream bit-exactly. The
/// uniform/normal transforms are implemented here rather than taken from
/// <random> because the standard leaves distribution output unspecified
/// across library implementations.
class Rng {
 public:
  Rng() : Rng(0x853c49e6748fea9bULL) {}

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 1) {
    state_ = 0;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const auto xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % range);
  }

  /// Standard normal via Box-Muller. Uses exactly two draws and keeps no
  /// cached spare, so the state stays trivially serializable.
  double normal(double mean = 0.0, double sd = 1.0) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * M_PI * u2);
  }

  /// Mixes a seed with a stream label; used to derive independent
  /// per-purpose substreams (splitmix64 finalizer).
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state() const { return state_; }
  std::uint64_t increment() const { return inc_; }

  static Rng from_state(std::uint64_t state, std::uint64_t inc) {
    Rng r;
    r.state_ = state;
    r.inc_ = inc;
    return r;
  }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.state_ == b.state_ && a.inc_ == b.inc_;
  }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
};

}  // namespace segarena
