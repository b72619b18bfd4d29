#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace gvhoi {

// Stateless counter-based generator. Every draw is a pure function of
// (key, counter), so streams are reproducible across platforms and can be
// addressed out of order (e.g. the Gumbel noise of frame t in video v at
// step s) without replaying earlier draws.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key = 0) : key_(key) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Derives an independent child stream.
  constexpr CounterRng fork(std::uint64_t tag) const {
    return CounterRng(mix(key_ ^ mix(tag + 0x632be59bd9b4e019ULL)));
  }
  CounterRng fork(std::string_view tag) const {
    return fork(hash_string(tag));
  }

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix(key_ + mix(counter));
  }

  // Uniform in the open interval (0, 1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on two sub-counters.
  double normal(std::uint64_t counter) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t counter, std::uint64_t n) const {
    return n == 0 ? 0 : bits(counter) % n;
  }

  double gumbel(std::uint64_t counter) const {
    return -std::log(-std::log(uniform(counter)));
  }

  constexpr std::uint64_t key() const { return key_; }

  static constexpr std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  std::uint64_t key_;
};

// Sequential cursor over a CounterRng for code that just wants "next".
class RngStream {
 public:
  explicit RngStream(CounterRng rng) : rng_(rng) {}
  double uniform() { return rng_.uniform(counter_++); }
  double normal() { return rng_.normal(counter_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return rng_.below(counter_++, n); }
  int range(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace gvhoi
