#pragma once

#include <cstdint>
#include <span>

namespace spsgd {

/// Counter-based pseudo-random stream (SplitMix64 output function over an
/// incrementing counter).  Streams are cheap to derive, and every draw is a
/// pure function of (key, counter), so experiment runs can be farmed out to
/// worker threads in any order and still reproduce bit-identical sequences.
class RngStream {
 public:
  /// Direct construction from a raw key; prefer derive_stream() for runs.
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() {
    counter_ += kGamma;
    return mix64(key_ + counter_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; always consumes exactly two uniforms.
  double next_gaussian();

  /// Fills `out` with iid standard normals, consuming ceil(n/2) Box-Muller
  /// pairs (both outputs of a pair are used).
  void fill_gaussian(std::span<double> out);

  std::uint64_t key() const { return key_; }

  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Derives an independent stream for (seed, run_index, purpose_tag).
/// Deterministic; distinct argument triples give unrelated streams.
RngStream derive_stream(std::uint64_t seed, std::uint64_t run_index,
                        std::uint64_t purpose_tag);

}  // namespace spsgd
