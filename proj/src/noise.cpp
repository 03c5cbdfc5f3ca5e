#include "spsgd/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spsgd {
namespace {

// E|N(0,1)|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi)
double abs_normal_moment(double p) {
  return std::exp((p / 2.0) * std::numbers::ln2 +
                  std::lgamma((p + 1.0) / 2.0) -
                  0.5 * std::log(std::numbers::pi));
}

// E|t_df|^p = df^{p/2} Gamma((p+1)/2) Gamma((df-p)/2) / (sqrt(pi) Gamma(df/2)),
// finite for df > p.
double abs_student_t_moment(double p, double df) {
  return std::exp((p / 2.0) * std::log(df) + std::lgamma((p + 1.0) / 2.0) +
                  std::lgamma((df - p) / 2.0) - 0.5 * std::log(std::numbers::pi) -
                  std::lgamma(df / 2.0));
}

// Marsaglia-Tsang gamma variate, shape > 0, unit scale.
double sample_gamma(double shape, RngStream& rng) {
  if (shape < 1.0) {
    const double u = std::max(rng.next_double(), 0x1.0p-60);
    return sample_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.next_gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v;
  }
}

}  // namespace

const char* noise_family_name(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::two_point: return "two_point";
    case NoiseFamily::two_sided_pareto: return "two_sided_pareto";
    case NoiseFamily::student_t: return "student_t";
    case NoiseFamily::zero: return "zero";
  }
  return "?";
}

NoiseFamily noise_family_from_name(const std::string& s) {
  if (s == "gaussian") return NoiseFamily::gaussian;
  if (s == "two_point") return NoiseFamily::two_point;
  if (s == "two_sided_pareto") return NoiseFamily::two_sided_pareto;
  if (s == "student_t") return NoiseFamily::student_t;
  if (s == "zero") return NoiseFamily::zero;
  throw std::invalid_argument("unknown noise family: " + s);
}

void NoiseSpec::validate() const {
  if (!(p > 1.0 && p <= 2.0))
    throw std::invalid_argument("NoiseSpec: p must lie in (1, 2]");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("NoiseSpec: sigma must be finite and >= 0");
  if (dim < 1) throw std::invalid_argument("NoiseSpec: dim must be >= 1");
  if (family == NoiseFamily::two_sided_pareto && !(alpha > p))
    throw std::invalid_argument(
        "NoiseSpec: two_sided_pareto requires alpha > p");
  if (family == NoiseFamily::student_t && !(df > p))
    throw std::invalid_argument("NoiseSpec: student_t requires df > p");
}

NoiseSampler::NoiseSampler(NoiseSpec spec) : spec_(spec) {
  spec_.validate();
  switch (spec_.family) {
    case NoiseFamily::gaussian:
      // radius = scale * |N(0,1)|
      radius_scale_ =
          spec_.sigma / std::pow(abs_normal_moment(spec_.p), 1.0 / spec_.p);
      break;
    case NoiseFamily::two_point:
      radius_scale_ = spec_.sigma;  // constant radius
      break;
    case NoiseFamily::two_sided_pareto:
      radius_scale_ = pareto_radius_scale(spec_.alpha, spec_.p, spec_.sigma);
      break;
    case NoiseFamily::student_t:
      radius_scale_ = spec_.sigma /
                      std::pow(abs_student_t_moment(spec_.p, spec_.df),
                               1.0 / spec_.p);
      break;
    case NoiseFamily::zero:
      radius_scale_ = 0.0;
      break;
  }
}

double NoiseSampler::sample_radius(RngStream& rng) const {
  if (spec_.sigma == 0.0 || spec_.family == NoiseFamily::zero) return 0.0;
  switch (spec_.family) {
    case NoiseFamily::gaussian:
      return radius_scale_ * std::abs(rng.next_gaussian());
    case NoiseFamily::two_point:
      return radius_scale_;
    case NoiseFamily::two_sided_pareto: {
      const double u = rng.next_double();           // in [0, 1)
      return radius_scale_ * std::pow(1.0 - u, -1.0 / spec_.alpha);
    }
    case NoiseFamily::student_t: {
      const double z = rng.next_gaussian();
      const double chi2 = 2.0 * sample_gamma(spec_.df / 2.0, rng);
      return radius_scale_ * std::abs(z) * std::sqrt(spec_.df / chi2);
    }
    case NoiseFamily::zero:
      return 0.0;
  }
  return 0.0;
}

Vec NoiseSampler::sample(RngStream& rng) const {
  const int d = spec_.dim;
  Vec out = Vec::Zero(d);
  if (spec_.sigma == 0.0 || spec_.family == NoiseFamily::zero) return out;
  const double r = sample_radius(rng);
  if (d == 1) {
    out[0] = (rng.next_double() < 0.5) ? -r : r;
    return out;
  }
  // Uniform direction on the sphere: normalized gaussian vector.
  double norm = 0.0;
  do {
    rng.fill_gaussian(std::span<double>(out.data(), static_cast<size_t>(d)));
    norm = out.norm();
  } while (norm < 1e-300);
  out *= r / norm;
  return out;
}

NoiseSampler make_noise_sampler(const NoiseSpec& spec) {
  return NoiseSampler(spec);
}

double pareto_radius_scale(double alpha, double p, double sigma) {
  if (!(p > 0.0)) throw std::invalid_argument("pareto_radius_scale: p must be > 0");
  if (!(alpha > p))
    throw std::invalid_argument(
        "pareto_radius_scale: alpha must exceed p (p-th moment is infinite "
        "otherwise)");
  if (!(sigma >= 0.0))
    throw std::invalid_argument("pareto_radius_scale: sigma must be >= 0");
  return sigma * std::pow((alpha - p) / alpha, 1.0 / p);
}

double empirical_moment(std::span<const Vec> samples, double q) {
  if (samples.empty())
    throw std::invalid_argument("empirical_moment: need at least one sample");
  if (!(q > 0.0)) throw std::invalid_argument("empirical_moment: q must be > 0");
  double acc = 0.0;
  for (const Vec& s : samples) acc += std::pow(s.norm(), q);
  return acc / static_cast<double>(samples.size());
}

double median_of_means(std::span<const double> values, int blocks) {
  if (blocks < 1) throw std::invalid_argument("median_of_means: blocks >= 1");
  const std::size_t n = values.size();
  const std::size_t block = n / static_cast<std::size_t>(blocks);
  if (block == 0)
    throw std::invalid_argument("median_of_means: not enough values");
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(blocks));
  for (int b = 0; b < blocks; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < block; ++i)
      acc += values[static_cast<std::size_t>(b) * block + i];
    means.push_back(acc / static_cast<double>(block));
  }
  std::nth_element(means.begin(), means.begin() + blocks / 2, means.end());
  double hi = means[static_cast<std::size_t>(blocks / 2)];
  if (blocks % 2 == 1) return hi;
  double lo = *std::max_element(means.begin(),
                                means.begin() + blocks / 2);
  return 0.5 * (lo + hi);
}

}  // namespace spsgd
