#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace svirgo {

// Simulated time, stored as an integer count of 1e-9 time units so that
// event ordering never depends on floating-point tie behaviour.
class SimTime {
 public:
  static constexpr std::int64_t kTicksPerUnit = 1'000'000'000;

  constexpr SimTime() = default;

  static constexpr SimTime from_ticks(std::int64_t ticks) {
    SimTime t;
    t.ticks_ = ticks;
    return t;
  }
  // Rounds to the nearest tick. Throws DomainError on non-finite input.
  static SimTime from_units(double units);

  constexpr std::int64_t ticks() const { return ticks_; }
  double units() const { return static_cast<double>(ticks_) / kTicksPerUnit; }

  // Fixed nine-decimal rendering, e.g. "2.500000000".
  std::string str() const;

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime operator+(SimTime other) const {
    return from_ticks(ticks_ + other.ticks_);
  }
  constexpr SimTime operator-(SimTime other) const {
    return from_ticks(ticks_ - other.ticks_);
  }

 private:
  std::int64_t ticks_{0};
};

}  // namespace svirgo
