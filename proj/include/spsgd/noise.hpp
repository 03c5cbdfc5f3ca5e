#pragma once

#include <span>
#include <string>
#include <vector>

#include "spsgd/record.hpp"
#include "spsgd/rng.hpp"

namespace spsgd {

enum class NoiseFamily { gaussian, two_point, two_sided_pareto, student_t, zero };

const char* noise_family_name(NoiseFamily f);
NoiseFamily noise_family_from_name(const std::string& s);

/// Description of a zero-mean gradient-noise distribution with
/// E||xi||^p = sigma^p exactly.  Samples are built radially: a scalar
/// radius (calibrated per family) times a uniform direction on the unit
/// sphere; in dimension 1 the direction degenerates to a fair sign.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  double p = 2.0;        // moment order, in (1, 2]
  double sigma = 1.0;    // p-th moment scale, >= 0
  int dim = 1;           // sample dimension, >= 1
  double alpha = 0.0;    // pareto tail index, required > p for that family
  double df = 0.0;       // student-t degrees of freedom, required > p

  /// Throws std::invalid_argument on any out-of-range field.
  void validate() const;
};

/// Immutable sampler for a validated NoiseSpec.  Thread-safe: all draw state
/// lives in the caller's RngStream.
class NoiseSampler {
 public:
  explicit NoiseSampler(NoiseSpec spec);

  Vec sample(RngStream& rng) const;

  /// Radius draw only (the norm of the eventual sample).
  double sample_radius(RngStream& rng) const;

  const NoiseSpec& spec() const { return spec_; }

  /// Multiplier applied to the family's base radius so that E r^p = sigma^p.
  double radius_scale() const { return radius_scale_; }

 private:
  NoiseSpec spec_;
  double radius_scale_ = 0.0;
};

NoiseSampler make_noise_sampler(const NoiseSpec& spec);

/// Pareto scale x_m with E r^p = sigma^p for tail index alpha:
/// x_m = sigma * ((alpha - p) / alpha)^(1/p).  Requires alpha > p > 0.
double pareto_radius_scale(double alpha, double p, double sigma);

/// (1/n) * sum ||xi_i||^q over a batch of samples; requires n >= 1, q > 0.
double empirical_moment(std::span<const Vec> samples, double q);

/// Median of per-block means; the heavy-tail-robust location estimate used
/// by tests that calibrate infinite-variance moments.  Requires at least one
/// full block.
double median_of_means(std::span<const double> values, int blocks);

}  // namespace spsgd
