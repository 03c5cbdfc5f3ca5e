#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "spsgd/precond.hpp"
#include "spsgd/rng.hpp"

using namespace spsgd;

namespace {

Vec vec_of(std::initializer_list<double> vals) {
  Vec v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

// Symmetric fractional power computed directly from an eigendecomposition;
// the test-side oracle for every inverse-root comparison below.
Mat sym_pow(const Mat& A, double expo, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  Vec ev = es.eigenvalues().cwiseMax(floor);
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = std::pow(ev[i], expo);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Kronecker product acting on row-major vectorization:
// (A (x) B)[(i*cB + j), (k*cB + l)] = A(i,k) B(j,l).
Mat kron(const Mat& A, const Mat& B) {
  Mat K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index k = 0; k < A.cols(); ++k)
      for (Eigen::Index j = 0; j < B.rows(); ++j)
        for (Eigen::Index l = 0; l < B.cols(); ++l)
          K(i * B.rows() + j, k * B.cols() + l) = A(i, k) * B(j, l);
  return K;
}

Mat random_spd(int n, double lo, double hi, RngStream& rng) {
  Mat G(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) G(r, c) = rng.next_gaussian();
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(G + G.transpose()));
  Vec ev(n);
  for (int i = 0; i < n; ++i)
    ev[i] = lo + (hi - lo) * rng.next_double();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

PrecondSpec spec_kind(PrecondKind k) {
  PrecondSpec s;
  s.kind = k;
  return s;
}

}  // namespace

TEST_CASE("kind names round-trip") {
  for (PrecondKind k :
       {PrecondKind::identity, PrecondKind::adagrad_diag,
        PrecondKind::rmsprop_diag, PrecondKind::shampoo_kron,
        PrecondKind::dense_spd, PrecondKind::adversarial_sign})
    CHECK(precond_kind_from_name(precond_kind_name(k)) == k);
  CHECK_THROWS_AS(precond_kind_from_name("newton"), std::invalid_argument);
}

TEST_CASE("spec validation") {
  PrecondSpec s = spec_kind(PrecondKind::rmsprop_diag);
  s.beta = 1.0;
  CHECK_THROWS_AS(s.validate(3), std::invalid_argument);
  s.beta = 0.9;
  s.eps_reg = 0.0;
  CHECK_THROWS_AS(s.validate(3), std::invalid_argument);
  s.eps_reg = 1e-8;
  CHECK_NOTHROW(s.validate(3));

  PrecondSpec sh = spec_kind(PrecondKind::shampoo_kron);
  sh.rows = 2;
  sh.cols = 2;
  CHECK_THROWS_AS(sh.validate(5), std::invalid_argument);  // 2*2 != 5
  CHECK_NOTHROW(sh.validate(4));

  PrecondSpec adv = spec_kind(PrecondKind::adversarial_sign);
  adv.m_d = 2.0;
  adv.M_d = 1.0;
  CHECK_THROWS_AS(adv.validate(1), std::invalid_argument);  // m_d > M_d
  adv.M_d = 3.0;
  CHECK_THROWS_AS(adv.validate(2), std::invalid_argument);  // 1-D only
  CHECK_NOTHROW(adv.validate(1));

  PrecondSpec cap = spec_kind(PrecondKind::identity);
  cap.kappa_cap = 0.5;
  CHECK_THROWS_AS(cap.validate(2), std::invalid_argument);

  PrecondSpec bounds = spec_kind(PrecondKind::identity);
  bounds.bound_m_d = 1.0;  // one-sided
  CHECK_THROWS_AS(bounds.validate(2), std::invalid_argument);
}

TEST_CASE("identity") {
  Preconditioner D(spec_kind(PrecondKind::identity), 3);
  const Vec v = vec_of({1.0, -2.0, 3.0});
  CHECK((D.apply(v) - v).norm() == 0.0);
  CHECK(D.condition_number() == 1.0);
  CHECK((D.effective_diag() - Vec::Ones(3)).norm() == 0.0);
  D.update(v);  // no-op
  CHECK((D.apply(v) - v).norm() == 0.0);
}

TEST_CASE("adagrad accumulates squared gradients") {
  PrecondSpec s = spec_kind(PrecondKind::adagrad_diag);
  s.eps_reg = 1e-8;
  Preconditioner D(s, 2);
  D.update(vec_of({3.0, 1.0}));
  D.update(vec_of({4.0, 0.0}));
  // acc = (9 + 16, 1 + 0) = (25, 1)
  CHECK((D.diag_accumulator() - vec_of({25.0, 1.0})).norm() < 1e-14);
  const Vec d = D.effective_diag();
  CHECK(d[0] == doctest::Approx(1.0 / std::sqrt(25.0 + 1e-8)).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(1.0 / std::sqrt(1.0 + 1e-8)).epsilon(1e-12));
  const Vec v = vec_of({2.0, 2.0});
  CHECK((D.apply(v) - d.cwiseProduct(v)).norm() < 1e-15);
  CHECK(D.condition_number() == doctest::Approx(d[1] / d[0]).epsilon(1e-12));
}

TEST_CASE("rmsprop follows the exponential moving average recursion") {
  PrecondSpec s = spec_kind(PrecondKind::rmsprop_diag);
  s.beta = 0.9;
  s.eps_reg = 1e-8;
  Preconditioner D(s, 1);
  D.update(vec_of({2.0}));  // acc = 0.1 * 4 = 0.4
  CHECK(D.diag_accumulator()[0] == doctest::Approx(0.4).epsilon(1e-12));
  D.update(vec_of({1.0}));  // acc = 0.9*0.4 + 0.1*1 = 0.46
  CHECK(D.diag_accumulator()[0] == doctest::Approx(0.46).epsilon(1e-12));
  CHECK(D.effective_diag()[0] ==
        doctest::Approx(1.0 / std::sqrt(0.46 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("fresh diagonal preconditioner is positive definite") {
  PrecondSpec s = spec_kind(PrecondKind::adagrad_diag);
  s.eps_reg = 1e-8;
  Preconditioner D(s, 2);  // no update yet
  const Vec d = D.effective_diag();
  CHECK(d[0] == doctest::Approx(1e4).epsilon(1e-10));  // 1/sqrt(eps)
  CHECK(D.condition_number() == doctest::Approx(1.0));
}

TEST_CASE("adversarial sign tracks the last gradient sign") {
  PrecondSpec s = spec_kind(PrecondKind::adversarial_sign);
  s.m_d = 1.0;
  s.M_d = 3.0;
  Preconditioner D(s, 1);
  CHECK(D.adversarial_scalar() == 1.0);  // starts on the small branch
  D.update(vec_of({-0.5}));
  CHECK(D.adversarial_scalar() == 3.0);
  CHECK(D.apply(vec_of({2.0}))[0] == doctest::Approx(6.0));
  D.update(vec_of({0.0}));  // zero counts as non-negative
  CHECK(D.adversarial_scalar() == 1.0);
  CHECK(D.condition_number() == 1.0);  // scalar operator
}

TEST_CASE("dense_spd applies the fixed matrix") {
  Mat A(2, 2);
  A << 2.0, 0.5, 0.5, 1.0;
  PrecondSpec s = spec_kind(PrecondKind::dense_spd);
  s.matrix = A;
  Preconditioner D(s, 2);
  const Vec v = vec_of({1.0, -1.0});
  CHECK((D.apply(v) - A * v).norm() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  CHECK(D.condition_number() ==
        doctest::Approx(es.eigenvalues().maxCoeff() /
                        es.eigenvalues().minCoeff()));
  D.update(v);  // stateless
  CHECK((D.apply(v) - A * v).norm() < 1e-14);

  PrecondSpec bad = s;
  bad.matrix = Mat::Identity(3, 3);
  CHECK_THROWS_AS(Preconditioner(bad, 2), std::invalid_argument);
  Mat indef(2, 2);
  indef << 1.0, 0.0, 0.0, -2.0;
  PrecondSpec bad2 = s;
  bad2.matrix = indef;
  CHECK_THROWS_AS(Preconditioner(bad2, 2), std::invalid_argument);
}

TEST_CASE("shampoo accumulators follow the factor recursions") {
  PrecondSpec s = spec_kind(PrecondKind::shampoo_kron);
  s.rows = 2;
  s.cols = 2;
  s.beta = 0.5;
  Preconditioner D(s, 4);
  const Vec g = vec_of({1.0, 2.0, 3.0, 4.0});  // row-major G = [[1,2],[3,4]]
  D.update(g);
  Mat G(2, 2);
  G << 1.0, 2.0, 3.0, 4.0;
  const Mat L1 = 0.5 * (G * G.transpose());
  const Mat R1 = 0.5 * (G.transpose() * G);
  CHECK((D.left_accumulator() - L1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((D.right_accumulator() - R1).cwiseAbs().maxCoeff() < 1e-14);
  D.update(g);
  CHECK((D.left_accumulator() - (0.5 * L1 + 0.5 * G * G.transpose()))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
}

TEST_CASE("shampoo equals the dense Kronecker quarter-inverse-root oracle") {
  RngStream rng = derive_stream(404, 0, 0);
  for (int rep = 0; rep < 40; ++rep) {
    const int r = 2 + static_cast<int>(rng.next_u64() % 3);  // 2..4
    const int c = 2 + static_cast<int>(rng.next_u64() % 2);  // 2..3
    PrecondSpec s = spec_kind(PrecondKind::shampoo_kron);
    s.rows = r;
    s.cols = c;
    s.eps_reg = 1e-8;
    Preconditioner D(s, r * c);
    // Factor eigenvalues in [0.5, 4]: far above the spectral floor, so the
    // oracle need not replicate flooring.
    const Mat L = random_spd(r, 0.5, 4.0, rng);
    const Mat R = random_spd(c, 0.5, 4.0, rng);
    D.install_kron_factors(L, R);

    const Mat M = kron(sym_pow(L, -0.25, s.eps_reg),
                       sym_pow(R, -0.25, s.eps_reg));
    Vec g(r * c);
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng.next_gaussian();
    const Vec expect = M * g;
    CHECK((D.apply(g) - expect).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("shampoo spectral floor engages for rank-deficient accumulators") {
  PrecondSpec s = spec_kind(PrecondKind::shampoo_kron);
  s.rows = 2;
  s.cols = 2;
  s.beta = 0.0;
  s.eps_reg = 1e-4;
  Preconditioner D(s, 4);
  const Vec g = vec_of({1.0, 0.0, 0.0, 0.0});
  D.update(g);  // L = diag(1,0), R = diag(1,0): zero eigenvalues floored
  Mat Gm(2, 2);
  Gm << 1.0, 0.0, 0.0, 0.0;
  const Mat M = kron(sym_pow(Gm * Gm.transpose(), -0.25, s.eps_reg),
                     sym_pow(Gm.transpose() * Gm, -0.25, s.eps_reg));
  Vec v = vec_of({1.0, 1.0, 1.0, 1.0});
  CHECK((D.apply(v) - M * v).cwiseAbs().maxCoeff() < 1e-10);
  // cond per factor = (1e-4)^{-1/4} / 1 = 10; two factors -> 100.
  CHECK(D.condition_number() == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("install_kron_factors guards its preconditions") {
  Preconditioner D(spec_kind(PrecondKind::identity), 4);
  CHECK_THROWS_AS(D.install_kron_factors(Mat::Identity(2, 2),
                                         Mat::Identity(2, 2)),
                  std::logic_error);
  PrecondSpec s = spec_kind(PrecondKind::shampoo_kron);
  s.rows = 2;
  s.cols = 2;
  Preconditioner Sh(s, 4);
  CHECK_THROWS_AS(Sh.install_kron_factors(Mat::Identity(3, 3),
                                          Mat::Identity(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("condition cap raises the small end only") {
  PrecondSpec s = spec_kind(PrecondKind::adagrad_diag);
  s.eps_reg = 1e-8;
  Preconditioner D(s, 2);
  D.update(vec_of({3.0, 0.0}));  // acc (9, 0) -> diag ~ (1/3, 1e4)
  const double uncapped = D.condition_number();
  CHECK(uncapped == doctest::Approx(3.0e4).epsilon(1e-3));

  const Preconditioner C = D.capped(100.0);
  CHECK(C.condition_number() == doctest::Approx(100.0).epsilon(1e-9));
  const Vec d = C.effective_diag();
  CHECK(d[1] == doctest::Approx(1e4).epsilon(1e-6));  // largest untouched
  CHECK(d[0] == doctest::Approx(1e2).epsilon(1e-6));  // raised to max/kappa
  const Vec v = vec_of({1.0, 1.0});
  CHECK((C.apply(v) - d).norm() < 1e-12);

  // Idempotent and monotone under composition.
  CHECK(C.capped(100.0).condition_number() ==
        doctest::Approx(100.0).epsilon(1e-9));
  CHECK(C.capped(1000.0).condition_number() ==
        doctest::Approx(100.0).epsilon(1e-9));  // keeps the tighter cap
  CHECK(D.capped(1000.0).capped(100.0).condition_number() ==
        doctest::Approx(100.0).epsilon(1e-9));
  CHECK_THROWS_AS(D.capped(0.5), std::invalid_argument);
}

TEST_CASE("condition cap on dense_spd clamps eigenvalues") {
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = 100.0;
  PrecondSpec s = spec_kind(PrecondKind::dense_spd);
  s.matrix = A;
  Preconditioner D(s, 2);
  const Preconditioner C = D.capped(10.0);
  CHECK(C.condition_number() == doctest::Approx(10.0));
  CHECK(C.apply(vec_of({1.0, 0.0}))[0] == doctest::Approx(10.0));  // 1 -> 10
  CHECK(C.apply(vec_of({0.0, 1.0}))[1] == doctest::Approx(100.0));
}

TEST_CASE("condition cap on shampoo caps each factor at sqrt(kappa)") {
  PrecondSpec s = spec_kind(PrecondKind::shampoo_kron);
  s.rows = 2;
  s.cols = 2;
  s.eps_reg = 1e-12;
  Preconditioner D(s, 4);
  Mat L = Mat::Zero(2, 2);
  L(0, 0) = 1.0;
  L(1, 1) = 1e8;  // factor cond of L^{-1/4}: (1e8)^{1/4} = 100
  D.install_kron_factors(L, L);
  CHECK(D.condition_number() == doctest::Approx(1e4).epsilon(1e-6));
  const Preconditioner C = D.capped(100.0);
  // Each factor clamps at sqrt(100) = 10, so the product meets the cap.
  CHECK(C.condition_number() == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("apply rejects dimension mismatches") {
  Preconditioner D(spec_kind(PrecondKind::identity), 3);
  CHECK_THROWS_AS(D.apply(Vec::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(D.update(Vec::Zero(4)), std::invalid_argument);
}

TEST_CASE("effective_diag is only for diagonal kinds") {
  PrecondSpec s = spec_kind(PrecondKind::shampoo_kron);
  s.rows = 1;
  s.cols = 1;
  Preconditioner D(s, 1);
  CHECK_THROWS_AS(D.effective_diag(), std::logic_error);
}
