#include "svirgo/error.hpp"
#include "svirgo/rng.hpp"
#include "svirgo/sim_time.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace svirgo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownCluster: return "UnknownCluster";
    case ErrorCode::UnknownScope: return "UnknownScope";
    case ErrorCode::NoCandidate: return "NoCandidate";
    case ErrorCode::EmptyGoalSet: return "EmptyGoalSet";
    case ErrorCode::RegionDead: return "RegionDead";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::Disconnected: return "Disconnected";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::ScenarioInvalid: return "ScenarioInvalid";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

SimTime SimTime::from_units(double units) {
  constexpr double kMax =
      static_cast<double>(std::numeric_limits<std::int64_t>::max() / kTicksPerUnit);
  if (!std::isfinite(units) || std::fabs(units) > kMax) {
    throw Error(ErrorCode::DomainError, "time value out of range");
  }
  return from_ticks(std::llround(units * static_cast<double>(kTicksPerUnit)));
}

std::string SimTime::str() const {
  const std::int64_t whole = ticks_ / kTicksPerUnit;
  std::int64_t frac = ticks_ % kTicksPerUnit;
  const bool negative = ticks_ < 0;
  if (frac < 0) frac = -frac;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%09lld", (negative && whole == 0) ? "-" : "",
                static_cast<long long>(whole), static_cast<long long>(frac));
  return buf;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(mix64(base) ^ a) ^ b);
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling keeps the result unbiased and portable.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

Rng& RngStreams::get(Stream stream, std::uint32_t region) {
  const auto key = std::make_pair(stream, region);
  auto it = streams_.find(key);
  if (it == streams_.end()) {
    it = streams_
             .emplace(key, Rng(derive_seed(seed_, static_cast<std::uint64_t>(stream),
                                           region)))
             .first;
  }
  return it->second;
}

}  // namespace svirgo
