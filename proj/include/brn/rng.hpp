#pragma once

/**
 * @file rng.hpp
 * @brief SplitMix64 generator with (seed, index) substreams.
 *
 * SplitMix64 (Steele, Lea, Flood 2014): state += 0x9E3779B97F4A7C15, then
 * z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
 * z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31).
 * The substream for (seed, index) starts from state mix(seed ^ mix(index)).
 * Uniform doubles use the top 53 bits: (x >> 11 + 0.5) * 2^-53, in (0, 1).
 */

#include <cmath>
#include <cstdint>
#include <limits>

namespace brn {

class SplitMix64 {
public:
   using result_type = std::uint64_t;

   explicit SplitMix64(std::uint64_t state = 0) : state_(state) {}
   SplitMix64(std::uint64_t seed, std::uint64_t index) : state_(mix(seed ^ mix(index))) {}

   static constexpr std::uint64_t mix(std::uint64_t z)
   {
      z += 0x9E3779B97F4A7C15ULL;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      return z ^ (z >> 31);
   }

   static constexpr result_type min() { return 0; }
   static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

   result_type operator()()
   {
      state_ += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = state_;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      return z ^ (z >> 31);
   }

   /// Uniform on the open interval (0, 1).
   double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

   /// Unit-mean exponential (Rayleigh power fade).
   double exponential() { return -std::log(uniform()); }

   bool bernoulli(double p) { return uniform() < p; }

private:
   std::uint64_t state_;
};

} // namespace brn
