#include "spsgd/rng.hpp"

#include <cmath>
#include <numbers>

namespace spsgd {

double RngStream::next_gaussian() {
  const double u1 = next_double();
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log1p(-u1));  // u1 < 1 => finite
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

void RngStream::fill_gaussian(std::span<double> out) {
  std::size_t i = 0;
  while (i + 1 < out.size()) {
    const double u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double a = 2.0 * std::numbers::pi * u2;
    out[i++] = r * std::cos(a);
    out[i++] = r * std::sin(a);
  }
  if (i < out.size()) out[i] = next_gaussian();
}

RngStream derive_stream(std::uint64_t seed, std::uint64_t run_index,
                        std::uint64_t purpose_tag) {
  // Absorb the three identifiers through successive SplitMix64 finalizers.
  std::uint64_t k = RngStream::mix64(seed + RngStream::kGamma);
  k = RngStream::mix64(k ^ (run_index + RngStream::kGamma));
  k = RngStream::mix64(k ^ (purpose_tag + RngStream::kGamma));
  return RngStream(k);
}

}  // namespace spsgd
