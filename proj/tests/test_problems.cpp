#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "spsgd/problems.hpp"

using namespace spsgd;

namespace {

// Central finite differences, the gradient oracle for every problem kind.
Vec fd_grad(const Problem& p, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (p.value(Point::of(hi)) - p.value(Point::of(lo))) / (2.0 * h);
  }
  return g;
}

Vec vec_of(std::initializer_list<double> vals) {
  Vec v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("quadratic value, gradient and smoothness") {
  Mat A(2, 2);
  A << 2.0, 0.0, 0.0, 4.0;
  const Problem p = Problem::quadratic(A);
  CHECK(p.dim() == 2);
  CHECK(p.kind_name() == "quadratic");
  const Point x = Point::of(vec_of({1.0, 1.0}));
  CHECK(p.value(x) == doctest::Approx(3.0));           // 0.5 (2 + 4)
  CHECK((p.grad(x) - vec_of({2.0, 4.0})).norm() < 1e-14);
  CHECK(p.smoothness_constant() == doctest::Approx(4.0));
  CHECK(p.f_star() == 0.0);
  CHECK((p.grad(x) - fd_grad(p, x.x)).norm() < 1e-6);
}

TEST_CASE("quadratic with cross terms matches finite differences") {
  Mat A(3, 3);
  A << 4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0;
  const Problem p = Problem::quadratic(A);
  const Vec x = vec_of({0.3, -1.2, 0.7});
  CHECK((p.grad(Point::of(x)) - fd_grad(p, x)).norm() < 1e-6);
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  CHECK(p.smoothness_constant() ==
        doctest::Approx(es.eigenvalues().maxCoeff()));
}

TEST_CASE("quadratic rejects asymmetric or indefinite matrices") {
  Mat asym(2, 2);
  asym << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(Problem::quadratic(asym), std::invalid_argument);
  Mat indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(Problem::quadratic(indef), std::invalid_argument);
}

TEST_CASE("cosine_sum") {
  const Problem p = Problem::cosine_sum(4);
  CHECK(p.smoothness_constant() == 1.0);
  CHECK(p.f_star() == 0.0);
  CHECK(p.value(Point::of(Vec::Zero(4))) == 0.0);
  const Vec x = vec_of({0.5, -1.0, 2.0, 3.1});
  double expect = 0.0;
  for (int i = 0; i < 4; ++i) expect += 1.0 - std::cos(x[i]);
  CHECK(p.value(Point::of(x)) == doctest::Approx(expect));
  CHECK((p.grad(Point::of(x)) - fd_grad(p, x)).norm() < 1e-6);
  for (int i = 0; i < 4; ++i)
    CHECK(p.grad(Point::of(x))[i] == doctest::Approx(std::sin(x[i])));
  CHECK_THROWS_AS(Problem::cosine_sum(0), std::invalid_argument);
}

TEST_CASE("logistic value, gradient and smoothness on fixed data") {
  Mat data(3, 2);
  data << 1.0, -0.5, 0.2, 0.8, -1.1, 0.4;
  const Problem p = Problem::logistic(data);
  CHECK(p.dim() == 2);
  const Vec x = vec_of({0.7, -0.3});
  double expect = 0.0;
  for (int j = 0; j < 3; ++j)
    expect += std::log(1.0 + std::exp(data.row(j).dot(x)));
  CHECK(p.value(Point::of(x)) == doctest::Approx(expect));
  CHECK((p.grad(Point::of(x)) - fd_grad(p, x)).norm() < 1e-6);
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(data.transpose() * data),
                                        Eigen::EigenvaluesOnly);
  CHECK(p.smoothness_constant() ==
        doctest::Approx(0.25 * es.eigenvalues().maxCoeff()));
  CHECK(p.f_star() == 0.0);
}

TEST_CASE("logistic value stays finite for extreme arguments") {
  Mat data(1, 1);
  data << 1.0;
  const Problem p = Problem::logistic(data);
  const double big = p.value(Point::of(vec_of({800.0})));
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(800.0));  // log(1+e^z) -> z for large z
  const double small = p.value(Point::of(vec_of({-800.0})));
  CHECK(small >= 0.0);
  CHECK(small < 1e-300);
}

TEST_CASE("logistic_random is seed-deterministic") {
  const Problem a = Problem::logistic_random(3, 5, 99);
  const Problem b = Problem::logistic_random(3, 5, 99);
  const Problem c = Problem::logistic_random(3, 5, 100);
  const Point x = Point::of(vec_of({0.1, 0.2, -0.3}));
  CHECK(a.value(x) == b.value(x));
  CHECK(a.value(x) != c.value(x));
  CHECK(a.smoothness_constant() == b.smoothness_constant());
  CHECK_THROWS_AS(Problem::logistic_random(0, 5, 1), std::invalid_argument);
}

TEST_CASE("scalar_quadratic") {
  const Problem p = Problem::scalar_quadratic();
  CHECK(p.dim() == 1);
  CHECK(p.smoothness_constant() == 1.0);
  CHECK(p.value(Point::of(vec_of({3.0}))) == doctest::Approx(4.5));
  CHECK(p.grad(Point::of(vec_of({3.0})))[0] == doctest::Approx(3.0));
}

TEST_CASE("dimension mismatches are rejected") {
  const Problem p = Problem::cosine_sum(3);
  CHECK_THROWS_AS(p.value(Point::of(Vec::Zero(2))), std::invalid_argument);
  CHECK_THROWS_AS(p.grad(Point::of(Vec::Zero(4))), std::invalid_argument);
}

TEST_CASE("stochastic gradient adds the sampled perturbation") {
  const Problem p = Problem::cosine_sum(2);
  NoiseSpec zero;
  zero.family = NoiseFamily::zero;
  zero.p = 2.0;
  zero.dim = 2;
  const NoiseSampler zs(zero);
  RngStream rng = derive_stream(5, 0, 0);
  const Point x = Point::of(vec_of({0.4, -0.9}));
  CHECK((p.stochastic_grad(x, zs, rng) - p.grad(x)).norm() == 0.0);

  NoiseSpec g = zero;
  g.family = NoiseFamily::gaussian;
  g.sigma = 1.0;
  const NoiseSampler gs(g);
  RngStream r1 = derive_stream(5, 0, 1);
  RngStream r2 = derive_stream(5, 0, 1);
  const Vec noisy = p.stochastic_grad(x, gs, r1);
  const Vec expect = p.grad(x) + gs.sample(r2);
  CHECK((noisy - expect).norm() == 0.0);

  NoiseSpec wrong = g;
  wrong.dim = 3;
  const NoiseSampler ws(wrong);
  CHECK_THROWS_AS(p.stochastic_grad(x, ws, rng), std::invalid_argument);
}
