#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spsgd/noise.hpp"
#include "spsgd/rng.hpp"

namespace spsgd {

/// Outcome of a single inequality/estimate check.  pass holds iff
/// lhs <= rhs * (1 + slack) + 3 * standard_error (terms that do not apply
/// are zero for the given check).
struct CheckReport {
  std::string name;
  std::string detail;        // parameter context, human readable
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double standard_error = 0.0;
  std::int64_t trials = 0;
  bool pass = false;
};

/// Additive slack granted to the pointwise scalar inequality check.
inline constexpr double kScalarSlack = 1e-12;

/// Pointwise scalar comparison:
///   |a+b|^p <= |a|^p + p sgn(a)|a|^{p-1} b + 2^{2-p} |b|^p  (+ slack).
/// Requires p in (1, 2].
bool scalar_pointwise_check(double a, double b, double p);

/// Monte-Carlo check of the vector moment inequality
///   E||sum_{k<T} X_k||^p <= 2^{2-p} sum_{k<T} E||X_k||^p
/// for iid draws from `noise`.  Both sides are estimated from the same
/// draws; pass iff lhs <= rhs * 1.02 + 3 * SE(lhs).
CheckReport burkholder_check(double p, std::int64_t T,
                             const NoiseSampler& noise, std::int64_t trials,
                             RngStream& rng);

/// Monte-Carlo estimate of E[D eps^u] in the 1-D two-point construction:
/// gbar = C +- sigma equiprobably, D = m_d when gbar > 0 and M_d otherwise,
/// eps^u the centered (un)clipped gradient.  With tau > sigma + C clipping
/// never binds and the estimate must match 0.5 * sigma * (m_d - M_d) within
/// 3 standard errors; tau <= sigma + C is rejected.
CheckReport example1_bias_estimate(double C, double sigma, double m_d,
                                   double M_d, double tau,
                                   std::int64_t trials, RngStream& rng);

/// Ceiling on E||m_k - grad f(x_k)|| for the normalized method:
///   theta^k sigma + theta eta L / (1-theta)
///     + 2^{2/p-1} (1-theta) sigma / (1-theta^p)^{1/p}.
double epsilon_bound(double theta, double eta, double L, double sigma,
                     double p, std::int64_t k);

/// Error-amplification constants of the precondition-then-clip variant:
///   upsilon1 = M_d^p / (m_d 2^{1-p}),
///   upsilon2 = 9 M_d^p / m_d^2 + (3/(2 m_d))^{2-p}.
struct PtcConstants {
  double upsilon1 = 0.0;
  double upsilon2 = 0.0;
};
PtcConstants ptc_error_constants(double m_d, double M_d, double p);

/// Least squares fit of log(metric) against log(T).
struct RateFit {
  double exponent = 0.0;   // slope
  double log_coeff = 0.0;  // intercept
  double r_squared = 1.0;  // 1 by convention for a constant series
};

/// Points are (T, metric); requires >= 2 points with T > 0 and metric > 0
/// (a non-positive metric is reported by index in the thrown message).
RateFit rate_fit(std::span<const std::pair<double, double>> points);

}  // namespace spsgd
