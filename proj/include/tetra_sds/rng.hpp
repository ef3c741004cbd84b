#pragma once

// Named random substreams.
//
// Every random quantity in a replication is drawn from a stream identified by
// (master seed, replication index, stream name).  The stream seed is a
// SplitMix64 finalisation of the three parts, so a stream can be created on
// demand anywhere without pre-allocating or threading a parent generator
// through the code.  Distribution transforms are written out here rather than
// taken from <random> because the standard distributions are allowed to
// differ between library implementations, which would break replay.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace tetra_sds {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t replication,
                                           std::string_view name) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ replication);
  return splitmix64(h ^ fnv1a(name));
}

class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}
  RngStream(std::uint64_t master, std::uint64_t replication, std::string_view name)
      : RngStream(stream_seed(master, replication, name)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  // Uniform on [0, 1).
  double uniform() {
    ++draws_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) {
      ++draws_;
      engine_();
      return 0;
    }
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Box-Muller; one standard normal per two uniforms, no caching so the
  // draw count per call stays fixed.
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

}  // namespace tetra_sds
