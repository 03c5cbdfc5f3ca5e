// Acceptance suite: ten end-to-end checks, one line of output each, exit
// status 0 iff all pass.  Tolerances are pinned here as named constants.
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "spsgd/experiment.hpp"

using namespace spsgd;
namespace fs = std::filesystem;

namespace {

// --- pinned tolerances ----------------------------------------------------
constexpr double kStepRelTol = 1e-12;       // |step - eta| / eta
constexpr double kSelectorTol = 1e-15;      // selector benchmark exactness
constexpr double kGaussSlope = -0.25;       // parameter-free schedule, p = 2
constexpr double kGaussSlopeTol = 0.08;
constexpr double kParetoSlope = -1.0 / 6.0; // parameter-free schedule, p = 1.5
constexpr double kParetoSlopeTol = 0.10;
constexpr double kRateR2Min = 0.9;
constexpr double kKronTol = 1e-10;          // dense quarter-root oracle, max-abs
constexpr std::uint64_t kSeed = 20250823;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void run_criterion(int index, const char* title,
                   const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (!out.pass) ++g_failures;
  std::printf("[%2d/10] %s  %-58s  [%6.2f s]  %s\n", index,
              out.pass ? "PASS" : "FAIL", title, secs, out.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

Mat random_spd(RngStream& rng, int n, double lo, double hi) {
  Mat b(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) b(r, c) = rng.next_gaussian();
  const Mat sym = b + b.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  Vec ev(n);
  for (int i = 0; i < n; ++i) ev[i] = lo + (hi - lo) * rng.next_double();
  return es.eigenvectors() * ev.asDiagonal() *
         es.eigenvectors().transpose();
}

// Row-major Kronecker product: K[(i*cB+j),(k*cB+l)] = A(i,k) * B(j,l).
Mat kron_rowmajor(const Mat& a, const Mat& b) {
  Mat k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      for (Eigen::Index kk = 0; kk < a.cols(); ++kk)
        for (Eigen::Index l = 0; l < b.cols(); ++l)
          k(i * b.rows() + j, kk * b.cols() + l) = a(i, kk) * b(j, l);
  return k;
}

Mat sym_pow(const Mat& a, double expo, double floor_ev) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  Vec ev = es.eigenvalues().cwiseMax(floor_ev);
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = std::pow(ev[i], expo);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return "<unreadable:" + path + ">";
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// --- criterion bodies -----------------------------------------------------

Outcome step_norm_invariant() {
  const double eta = 1e-3;
  HyperParams hp;
  hp.eta = eta;
  hp.theta = 0.9;
  hp.horizon = 10000;

  struct Setup {
    const char* label;
    PrecondSpec spec;
    int dim;
  };
  RngStream init = derive_stream(kSeed, 0, 0x51);
  std::vector<Setup> setups;
  setups.push_back({"identity", {}, 6});
  {
    PrecondSpec s;
    s.kind = PrecondKind::adagrad_diag;
    setups.push_back({"adagrad_diag", s, 6});
  }
  {
    PrecondSpec s;
    s.kind = PrecondKind::rmsprop_diag;
    s.beta = 0.9;
    setups.push_back({"rmsprop_diag", s, 6});
  }
  {
    PrecondSpec s;
    s.kind = PrecondKind::shampoo_kron;
    s.rows = 3;
    s.cols = 2;
    s.beta = 0.9;
    setups.push_back({"shampoo_kron", s, 6});
  }
  {
    PrecondSpec s;
    s.kind = PrecondKind::dense_spd;
    s.matrix = random_spd(init, 6, 0.5, 2.0);
    setups.push_back({"dense_spd", s, 6});
  }
  {
    PrecondSpec s;
    s.kind = PrecondKind::adversarial_sign;
    s.m_d = 1.0;
    s.M_d = 3.0;
    setups.push_back({"adversarial_sign", s, 1});
  }

  double worst = 0.0;
  std::string worst_kind = "-";
  for (std::size_t i = 0; i < setups.size(); ++i) {
    const auto& su = setups[i];
    const Problem prob = su.dim == 1
                             ? Problem::scalar_quadratic()
                             : Problem::quadratic(Mat::Identity(su.dim, su.dim));
    NoiseSpec ns;
    ns.family = NoiseFamily::gaussian;
    ns.p = 2.0;
    ns.sigma = 1.0;
    ns.dim = su.dim;
    RngStream rng = derive_stream(kSeed, i, 0x52);
    const RunRecord rec =
        run(prob, OptimizerKind::spsgd_norm, su.spec, ns, hp,
            Point::of(Vec::Constant(su.dim, 1.5)), rng);
    if (rec.diverged)
      return {false, std::string("unexpected divergence under ") + su.label};
    if (static_cast<std::int64_t>(rec.rows.size()) != hp.horizon)
      return {false, std::string("short run under ") + su.label};
    std::int64_t zero_rows = 0;
    for (const auto& row : rec.rows) {
      if (row.step_norm == 0.0) {
        ++zero_rows;
        continue;
      }
      const double rel = std::abs(row.step_norm - eta) / eta;
      if (rel > worst) {
        worst = rel;
        worst_kind = su.label;
      }
    }
    if (zero_rows != rec.zero_direction_events)
      return {false, std::string("zero-step bookkeeping off under ") + su.label};
  }
  return {worst <= kStepRelTol, "max rel dev " + fmt(worst) + " (" +
                                    worst_kind + ", tol " + fmt(kStepRelTol) +
                                    ")"};
}

Outcome selector_benchmarks() {
  const HyperParams known = select_hparams_known(1.0, 1.0, 1.0, 2.0, 10000);
  const HyperParams unknown = select_hparams_unknown(10000);
  const double worst = std::max(
      {std::abs(known.eta - 1e-3), std::abs(known.theta - 0.99),
       std::abs(unknown.eta - 1e-3), std::abs(unknown.theta - 0.99)});
  return {worst <= kSelectorTol,
          "max deviation from (1e-3, 0.99): " + fmt(worst) + " (tol " +
              fmt(kSelectorTol) + ")"};
}

Outcome scalar_grid() {
  const VerifyOutcome out = verify_suite("scalar", kSeed);
  double worst = -1.0;
  for (const auto& c : out.checks) worst = std::max(worst, c.lhs);
  return {out.all_pass, fmt(out.checks.size()) + " grids, worst excess " +
                            fmt(worst) + " (slack " + fmt(kScalarSlack) + ")"};
}

Outcome burkholder_suite() {
  const VerifyOutcome out = verify_suite("burkholder", kSeed);
  int checks = 0, bands = 0;
  double worst_ratio = 0.0;
  for (const auto& c : out.checks) {
    if (c.name == "burkholder") {
      ++checks;
      worst_ratio = std::max(worst_ratio, c.lhs / c.rhs);
    } else {
      ++bands;
    }
  }
  if (checks != 12 || bands != 4)
    return {false, "unexpected suite shape"};
  return {out.all_pass, "12 moment checks + 4 ratio bands, worst lhs/rhs " +
                            fmt(worst_ratio)};
}

Outcome example1_bias() {
  const VerifyOutcome out = verify_suite("example1", kSeed);
  if (out.checks.size() != 1) return {false, "unexpected suite shape"};
  const auto& c = out.checks.front();
  return {out.all_pass, "|estimate - (-10)| = " + fmt(c.lhs) +
                            " <= 3 SE = " + fmt(c.rhs)};
}

Outcome separation() {
  const SeparationReport rep = separation_demo("", kSeed, 2);
  return {rep.all_pass, "clipped " + fmt(rep.ctp_final_mean_grad) +
                            " (>3.5, within 1 of " + fmt(rep.fixed_point) +
                            "), normalized " + fmt(rep.norm_final_mean_grad) +
                            " (<1.5)"};
}

Outcome rate_reproduction() {
  const char* base = R"({
    "problem": {"kind": "cosine_sum", "dim": 10},
    "optimizer": "spsgd_norm",
    "hyperparams": {"mode": "unknown"},
    "horizons": [512, 1024, 2048, 4096, 8192, 16384, 32768],
    "repetitions": 20,
    "seed": 20250823,
    "noise": )";
  auto fit_for = [&](const std::string& noise) {
    ExperimentConfig cfg =
        ExperimentConfig::parse_text(std::string(base) + noise + "}");
    return run_rates(cfg, 2, "");
  };
  const RatesReport gauss =
      fit_for(R"({"family": "gaussian", "p": 2.0, "sigma": 1.0})");
  const RatesReport pareto = fit_for(
      R"({"family": "two_sided_pareto", "p": 1.5, "sigma": 1.0, "alpha": 1.8})");

  const bool gauss_ok =
      std::abs(gauss.fit.exponent - kGaussSlope) <= kGaussSlopeTol &&
      gauss.fit.r_squared > kRateR2Min;
  const bool pareto_ok =
      std::abs(pareto.fit.exponent - kParetoSlope) <= kParetoSlopeTol &&
      pareto.fit.r_squared > kRateR2Min;
  return {gauss_ok && pareto_ok,
          "gaussian slope " + fmt(gauss.fit.exponent) + " (want -0.25±0.08, r2 " +
              fmt(gauss.fit.r_squared) + "), pareto slope " +
              fmt(pareto.fit.exponent) + " (want -0.167±0.10, r2 " +
              fmt(pareto.fit.r_squared) + ")"};
}

Outcome epsilon_ceiling() {
  const VerifyOutcome out = verify_suite("epsilon", kSeed);
  if (out.checks.size() != 1) return {false, "unexpected suite shape"};
  const auto& c = out.checks.front();
  return {out.all_pass,
          "worst mean/bound ratio " + fmt(c.lhs) + " (limit 1.05, " +
              c.detail + ")"};
}

Outcome kron_oracle() {
  RngStream rng = derive_stream(kSeed, 0, 0x6B);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 2 + static_cast<int>(rng.next_double() * 3.0);  // 2..4
    const int c = 1 + static_cast<int>(rng.next_double() * 3.0);  // 1..3
    PrecondSpec spec;
    spec.kind = PrecondKind::shampoo_kron;
    spec.rows = r;
    spec.cols = c;
    Preconditioner pre(spec, r * c);
    const Mat left = random_spd(rng, r, 0.1, 10.0);
    const Mat right = random_spd(rng, c, 0.1, 10.0);
    pre.install_kron_factors(left, right);

    const Mat dense =
        sym_pow(kron_rowmajor(left, right), -0.25, spec.eps_reg);
    Vec g(r * c);
    for (int i = 0; i < r * c; ++i) g[i] = rng.next_gaussian();
    const Vec got = pre.apply(g);
    const Vec want = dense * g;
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
  }
  return {worst <= kKronTol, "200 factor pairs (up to 4x3), max abs dev " +
                                 fmt(worst) + " (tol " + fmt(kKronTol) + ")"};
}

Outcome determinism() {
  const ExperimentConfig cfg = ExperimentConfig::parse_text(R"({
    "problem": {"kind": "quadratic", "diag": [1.0, 2.0, 3.0, 4.0]},
    "optimizer": "spsgd_norm",
    "noise": {"family": "gaussian", "p": 2.0, "sigma": 1.0},
    "hyperparams": {"mode": "unknown"},
    "horizons": [256, 512],
    "repetitions": 8,
    "seed": 77
  })");
  const std::string roots[] = {"acc_det_a", "acc_det_b", "acc_det_c"};
  const int jobs[] = {1, 8, 8};
  std::vector<std::string> summaries, runs;
  for (int i = 0; i < 3; ++i) {
    fs::remove_all(roots[i]);
    const ResultsTable t = run_experiment(cfg, jobs[i], roots[i]);
    summaries.push_back(slurp(t.out_dir + "/summary.csv"));
    runs.push_back(slurp(t.out_dir + "/run_T512_r7.csv"));
  }
  const bool same = summaries[0] == summaries[1] &&
                    summaries[1] == summaries[2] && runs[0] == runs[1] &&
                    runs[1] == runs[2];
  for (const auto& r : roots) fs::remove_all(r);
  if (summaries[0].find("T,optimizer,") != 0)
    return {false, "summary header missing"};
  return {same, same ? "jobs 1 vs 8 vs 8: summary and run CSVs byte-identical"
                     : "byte mismatch between job counts"};
}

}  // namespace

int main() {
  run_criterion(1, "normalized step length equals eta for every preconditioner",
                step_norm_invariant);
  run_criterion(2, "hyperparameter selectors hit the closed-form benchmark",
                selector_benchmarks);
  run_criterion(3, "scalar moment inequality holds on the full grid",
                scalar_grid);
  run_criterion(4, "vector moment inequality holds across noise families",
                burkholder_suite);
  run_criterion(5, "two-point construction reproduces the -10 bias",
                example1_bias);
  run_criterion(6, "clipping stalls at the fixed point, normalization converges",
                separation);
  run_criterion(7, "measured decay slopes match the schedule's exponents",
                rate_reproduction);
  run_criterion(8, "momentum averaging error stays under its ceiling",
                epsilon_ceiling);
  run_criterion(9, "factored quarter-inverse-root matches the dense oracle",
                kron_oracle);
  run_criterion(10, "summary and run CSVs are byte-stable across job counts",
                determinism);

  if (g_failures == 0) {
    std::printf("all 10 criteria passed\n");
    return 0;
  }
  std::printf("%d of 10 criteria FAILED\n", g_failures);
  return 1;
}
