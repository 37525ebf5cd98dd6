#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <utility>

namespace svirgo {

// splitmix64 finalizer; used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

// Seeded generator with platform-stable conversions. std::mt19937_64 output is
// fixed by the standard; the distribution helpers here avoid the
// implementation-defined std::*_distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform01() < p; }

  template <class Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

enum class Stream : std::uint64_t {
  Delay = 1,
  Failure = 2,
  Jam = 3,
  Scenario = 4,
};

// One logical RNG per run, split into sub-streams keyed by (stream, region) so
// that draws in one region never shift draws in another.
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t seed) : seed_(seed) {}

  Rng& get(Stream stream, std::uint32_t region);

 private:
  std::uint64_t seed_;
  std::map<std::pair<Stream, std::uint32_t>, Rng> streams_;
};

}  // namespace svirgo
