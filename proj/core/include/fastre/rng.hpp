#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

#include "fastre/precision.hpp"

FASTRE_BEGIN_NAMESPACE

/// Seedable generator shared by every stochastic operation (initialization,
/// dropout, shuffling).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The conversions below are written out instead of using the
/// <random> distributions, whose algorithms are implementation-defined:
///   uniform01()    = (next() >> 11) * 2^-53
///   below(bound)   = rejection sampling on the top bits of next()
///   shuffle(items) = Fisher-Yates from the back, swap(i, below(i + 1))
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % bound;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

FASTRE_END_NAMESPACE
