#pragma once

#include <cstdint>
#include <initializer_list>

#include "fhci/normal.hpp"

namespace fhci {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream keyed by a path of integers, e.g. (seed, replicate,
/// area). Each draw is a pure function of (key, counter), so results never
/// depend on which thread consumes which stream.
class StreamRng {
 public:
  explicit StreamRng(std::uint64_t key) : key_(key) {}

  static StreamRng keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = splitmix64(seed);
    for (const std::uint64_t part : path) key = splitmix64(key ^ splitmix64(part + 0x632be59bd9b4e019ULL));
    return StreamRng(key);
  }

  std::uint64_t next_u64() { return splitmix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by inversion.
  double normal() { return normal::quantile(uniform()); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace fhci
