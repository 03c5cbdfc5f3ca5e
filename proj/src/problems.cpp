#include "spsgd/problems.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace spsgd {
namespace {

void check_symmetric(const Mat& A, const char* what) {
  if (A.rows() != A.cols())
    throw std::invalid_argument(std::string(what) + ": matrix must be square");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument(std::string(what) + ": matrix must be symmetric");
}

double lambda_max_spd(const Mat& A, const char* what, bool require_pd) {
  check_symmetric(A, what);
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (require_pd && !(lo > 0.0))
    throw std::invalid_argument(std::string(what) +
                                ": matrix must be positive definite");
  return hi;
}

}  // namespace

Problem Problem::quadratic(Mat A) {
  Problem p;
  p.k_ = Kind::quadratic;
  p.kind_ = "quadratic";
  p.smoothness_ = lambda_max_spd(A, "Problem::quadratic", true);
  p.dim_ = static_cast<int>(A.rows());
  p.f_star_ = 0.0;
  p.A_ = std::move(A);
  return p;
}

Problem Problem::cosine_sum(int dim) {
  if (dim < 1) throw std::invalid_argument("Problem::cosine_sum: dim >= 1");
  Problem p;
  p.k_ = Kind::cosine_sum;
  p.kind_ = "cosine_sum";
  p.dim_ = dim;
  p.smoothness_ = 1.0;
  p.f_star_ = 0.0;
  return p;
}

Problem Problem::logistic(Mat data) {
  if (data.rows() < 1 || data.cols() < 1)
    throw std::invalid_argument("Problem::logistic: data must be non-empty");
  Problem p;
  p.k_ = Kind::logistic;
  p.kind_ = "logistic";
  p.dim_ = static_cast<int>(data.cols());
  p.smoothness_ =
      0.25 * lambda_max_spd(Mat(data.transpose() * data),
                            "Problem::logistic", false);
  p.f_star_ = 0.0;
  p.A_ = std::move(data);
  return p;
}

Problem Problem::logistic_random(int dim, int rows, std::uint64_t data_seed) {
  if (dim < 1 || rows < 1)
    throw std::invalid_argument("Problem::logistic_random: dim, rows >= 1");
  Mat data(rows, dim);
  RngStream rng = derive_stream(data_seed, 0, /*purpose_tag=*/0x10915);
  std::vector<double> buf(static_cast<std::size_t>(rows) * dim);
  rng.fill_gaussian(buf);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < dim; ++c)
      data(r, c) = buf[static_cast<std::size_t>(r) * dim + c];
  return logistic(std::move(data));
}

Problem Problem::scalar_quadratic() {
  Problem p;
  p.k_ = Kind::scalar_quadratic;
  p.kind_ = "scalar_quadratic";
  p.dim_ = 1;
  p.smoothness_ = 1.0;
  p.f_star_ = 0.0;
  return p;
}

double Problem::value(const Point& x) const {
  if (x.dim() != dim_)
    throw std::invalid_argument("Problem::value: dimension mismatch");
  switch (k_) {
    case Kind::quadratic:
      return 0.5 * x.x.dot(A_ * x.x);
    case Kind::cosine_sum: {
      double acc = 0.0;
      for (int i = 0; i < dim_; ++i) acc += 1.0 - std::cos(x.x[i]);
      return acc;
    }
    case Kind::logistic: {
      double acc = 0.0;
      const Vec z = A_ * x.x;
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        // log(1 + exp(z)) computed without overflow.
        acc += (z[j] > 0.0) ? z[j] + std::log1p(std::exp(-z[j]))
                            : std::log1p(std::exp(z[j]));
      }
      return acc;
    }
    case Kind::scalar_quadratic:
      return 0.5 * x.x[0] * x.x[0];
  }
  return 0.0;
}

Vec Problem::grad(const Point& x) const {
  if (x.dim() != dim_)
    throw std::invalid_argument("Problem::grad: dimension mismatch");
  switch (k_) {
    case Kind::quadratic:
      return A_ * x.x;
    case Kind::cosine_sum: {
      Vec g(dim_);
      for (int i = 0; i < dim_; ++i) g[i] = std::sin(x.x[i]);
      return g;
    }
    case Kind::logistic: {
      const Vec z = A_ * x.x;
      Vec s(z.size());
      for (Eigen::Index j = 0; j < z.size(); ++j)
        s[j] = 1.0 / (1.0 + std::exp(-z[j]));  // sigmoid
      return A_.transpose() * s;
    }
    case Kind::scalar_quadratic:
      return x.x;
  }
  return Vec::Zero(dim_);
}

Vec Problem::stochastic_grad(const Point& x, const NoiseSampler& noise,
                             RngStream& rng) const {
  if (noise.spec().dim != dim_)
    throw std::invalid_argument(
        "Problem::stochastic_grad: noise dimension mismatch");
  return grad(x) + noise.sample(rng);
}

}  // namespace spsgd
