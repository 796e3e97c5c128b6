#pragma once

#include <cmath>
#include <cstdint>

namespace panel {

// Generator identifier, printed by the CLI and recorded in run manifests.
// The algorithm below is frozen: changing it requires bumping this string.
inline constexpr const char* kRngVersion = "splitmix64-ctr/1";

// Counter-based generator built on the splitmix64 finalizer. Output i of
// stream s under seed k is mix(key(k,s) + i*gamma), so draws depend only on
// (seed, stream, counter) and never on call order across streams. Each
// simulation replication owns stream index = replication index.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(derive_key(seed, stream)) {}

  std::uint64_t next_u64() { return mix(key_ + kGamma * ++counter_); }

  // Uniform on [0,1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool next_bernoulli(double p) { return next_double() < p; }

  // Standard normal via Box-Muller; the paired draw is cached.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - next_double();  // (0,1], keeps log finite
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_ = r * std::sin(angle);
    have_cached_ = true;
    return r * std::cos(angle);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix(mix(seed + kGamma) ^ (stream * 0xBF58476D1CE4E5B9ull + 1ull));
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace panel
