#pragma once

#include <cstdint>
#include <string>

#include "spsgd/noise.hpp"
#include "spsgd/record.hpp"

namespace spsgd {

/// Differentiable objective with a known smoothness constant and a lower
/// bound on its infimum.  All four kinds are L-smooth and bounded below.
class Problem {
 public:
  /// f(x) = 0.5 x^T A x with A symmetric positive definite; L = lambda_max(A).
  static Problem quadratic(Mat A);

  /// f(x) = sum_i (1 - cos x_i); L = 1, infimum 0.
  static Problem cosine_sum(int dim);

  /// f(x) = sum_j log(1 + exp(a_j^T x)) over the rows a_j of the data matrix;
  /// L = lambda_max(A^T A) / 4.  f_star is the trivial lower bound 0 (each
  /// summand is positive; the infimum of the sum is not available in closed
  /// form for generic data).
  static Problem logistic(Mat data);

  /// Convenience: logistic with a seeded standard-normal data matrix.
  static Problem logistic_random(int dim, int rows, std::uint64_t data_seed);

  /// f(x) = 0.5 x^2 in dimension 1.
  static Problem scalar_quadratic();

  int dim() const { return dim_; }
  const std::string& kind_name() const { return kind_; }

  double value(const Point& x) const;
  Vec grad(const Point& x) const;

  /// Smallest L with ||grad f(x) - grad f(y)|| <= L ||x - y||.
  double smoothness_constant() const { return smoothness_; }

  /// Lower bound on inf f (tight for all kinds except logistic).
  double f_star() const { return f_star_; }

  /// grad f(x) + xi with xi drawn from the sampler (dimensions must agree).
  Vec stochastic_grad(const Point& x, const NoiseSampler& noise,
                      RngStream& rng) const;

 private:
  enum class Kind { quadratic, cosine_sum, logistic, scalar_quadratic };
  Kind k_ = Kind::scalar_quadratic;
  std::string kind_;
  int dim_ = 1;
  double smoothness_ = 1.0;
  double f_star_ = 0.0;
  Mat A_;  // quadratic matrix or logistic data
};

}  // namespace spsgd
