#include "spsgd/verify.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spsgd {
namespace {

double sgn(double v) { return (v > 0.0) - (v < 0.0); }

double sample_mean(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double standard_error(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  const double var = acc / static_cast<double>(v.size() - 1);
  return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

bool scalar_pointwise_check(double a, double b, double p) {
  if (!(p > 1.0 && p <= 2.0))
    throw std::invalid_argument("scalar_pointwise_check: p must lie in (1, 2]");
  const double lhs = std::pow(std::abs(a + b), p);
  const double rhs = std::pow(std::abs(a), p) +
                     p * sgn(a) * std::pow(std::abs(a), p - 1.0) * b +
                     std::pow(2.0, 2.0 - p) * std::pow(std::abs(b), p);
  return lhs <= rhs + kScalarSlack;
}

CheckReport burkholder_check(double p, std::int64_t T,
                             const NoiseSampler& noise, std::int64_t trials,
                             RngStream& rng) {
  if (!(p > 1.0 && p <= 2.0))
    throw std::invalid_argument("burkholder_check: p must lie in (1, 2]");
  if (T < 1 || trials < 2)
    throw std::invalid_argument("burkholder_check: need T >= 1, trials >= 2");

  std::vector<double> per_trial(static_cast<std::size_t>(trials));
  double draw_moment_acc = 0.0;
  Vec sum;
  for (std::int64_t t = 0; t < trials; ++t) {
    sum = Vec::Zero(noise.spec().dim);
    for (std::int64_t k = 0; k < T; ++k) {
      const Vec x = noise.sample(rng);
      draw_moment_acc += std::pow(x.norm(), p);
      sum += x;
    }
    per_trial[static_cast<std::size_t>(t)] = std::pow(sum.norm(), p);
  }

  CheckReport rep;
  rep.name = "burkholder";
  rep.lhs = sample_mean(per_trial);
  rep.rhs = std::pow(2.0, 2.0 - p) *
            (draw_moment_acc / static_cast<double>(trials));
  rep.slack = 0.02;
  rep.standard_error = standard_error(per_trial, rep.lhs);
  rep.trials = trials;
  rep.pass = rep.lhs <= rep.rhs * (1.0 + rep.slack) + 3.0 * rep.standard_error;
  std::ostringstream d;
  d << "p=" << p << " T=" << T << " family="
    << noise_family_name(noise.spec().family) << " d=" << noise.spec().dim
    << " ratio=" << (rep.lhs / rep.rhs);
  rep.detail = d.str();
  return rep;
}

CheckReport example1_bias_estimate(double C, double sigma, double m_d,
                                   double M_d, double tau,
                                   std::int64_t trials, RngStream& rng) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("example1_bias_estimate: sigma must be > 0");
  if (!(m_d > 0.0) || !(M_d >= m_d))
    throw std::invalid_argument("example1_bias_estimate: need 0 < m_d <= M_d");
  if (!(tau > sigma + std::abs(C)))
    throw std::invalid_argument(
        "example1_bias_estimate: tau must exceed sigma + |C| so clipping "
        "stays inactive");
  if (trials < 2)
    throw std::invalid_argument("example1_bias_estimate: trials >= 2");

  std::vector<double> ghat(static_cast<std::size_t>(trials));
  std::vector<double> dvals(static_cast<std::size_t>(trials));
  for (std::int64_t t = 0; t < trials; ++t) {
    const double s = (rng.next_double() < 0.5) ? -1.0 : 1.0;
    const double gbar = C + s * sigma;
    const double c = (std::abs(gbar) > tau) ? tau / std::abs(gbar) : 1.0;
    ghat[static_cast<std::size_t>(t)] = c * gbar;
    dvals[static_cast<std::size_t>(t)] = (gbar > 0.0) ? m_d : M_d;
  }
  const double mean_ghat = sample_mean(ghat);
  std::vector<double> prod(static_cast<std::size_t>(trials));
  for (std::size_t t = 0; t < prod.size(); ++t)
    prod[t] = dvals[t] * (ghat[t] - mean_ghat);

  const double estimate = sample_mean(prod);
  const double expected = 0.5 * sigma * (m_d - M_d);

  CheckReport rep;
  rep.name = "example1_bias";
  rep.lhs = std::abs(estimate - expected);
  rep.standard_error = standard_error(prod, estimate);
  rep.rhs = 3.0 * rep.standard_error;
  rep.trials = trials;
  rep.pass = rep.lhs <= rep.rhs;
  std::ostringstream d;
  d << "estimate=" << estimate << " expected=" << expected << " C=" << C
    << " sigma=" << sigma << " m_d=" << m_d << " M_d=" << M_d
    << " tau=" << tau;
  rep.detail = d.str();
  return rep;
}

double epsilon_bound(double theta, double eta, double L, double sigma,
                     double p, std::int64_t k) {
  if (!(theta >= 0.0 && theta < 1.0))
    throw std::invalid_argument("epsilon_bound: theta must lie in [0, 1)");
  if (!(eta >= 0.0) || !(L >= 0.0) || !(sigma >= 0.0))
    throw std::invalid_argument("epsilon_bound: eta, L, sigma must be >= 0");
  if (!(p > 1.0 && p <= 2.0))
    throw std::invalid_argument("epsilon_bound: p must lie in (1, 2]");
  if (k < 0) throw std::invalid_argument("epsilon_bound: k must be >= 0");
  const double decay = (k == 0) ? 1.0 : std::pow(theta, static_cast<double>(k));
  const double drift = (theta == 0.0) ? 0.0 : theta * eta * L / (1.0 - theta);
  const double fluct = std::pow(2.0, 2.0 / p - 1.0) * (1.0 - theta) * sigma /
                       std::pow(1.0 - std::pow(theta, p), 1.0 / p);
  return decay * sigma + drift + fluct;
}

PtcConstants ptc_error_constants(double m_d, double M_d, double p) {
  if (!(m_d > 0.0) || !(M_d >= m_d))
    throw std::invalid_argument("ptc_error_constants: need 0 < m_d <= M_d");
  if (!(p > 1.0 && p <= 2.0))
    throw std::invalid_argument("ptc_error_constants: p must lie in (1, 2]");
  PtcConstants c;
  c.upsilon1 = std::pow(M_d, p) / (m_d * std::pow(2.0, 1.0 - p));
  c.upsilon2 = 9.0 * std::pow(M_d, p) / (m_d * m_d) +
               std::pow(1.5 / m_d, 2.0 - p);
  return c;
}

RateFit rate_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2)
    throw std::invalid_argument("rate_fit: need at least two points");
  const auto n = static_cast<double>(points.size());
  std::vector<double> lx(points.size()), ly(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].first > 0.0) || !(points[i].second > 0.0)) {
      std::ostringstream msg;
      msg << "rate_fit: point " << i << " (T=" << points[i].first
          << ", metric=" << points[i].second << ") is not positive";
      throw std::invalid_argument(msg.str());
    }
    lx[i] = std::log(points[i].first);
    ly[i] = std::log(points[i].second);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("rate_fit: horizons must not all coincide");

  RateFit fit;
  fit.exponent = sxy / sxx;
  fit.log_coeff = my - fit.exponent * mx;
  if (syy <= 1e-300) {
    fit.exponent = 0.0;
    fit.log_coeff = my;
    fit.r_squared = 1.0;  // constant series: perfect fit by convention
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double r = ly[i] - (fit.log_coeff + fit.exponent * lx[i]);
      ss_res += r * r;
    }
    fit.r_squared = 1.0 - ss_res / syy;
  }
  return fit;
}

}  // namespace spsgd
