#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spsgd/noise.hpp"
#include "spsgd/optim.hpp"
#include "spsgd/plot.hpp"
#include "spsgd/precond.hpp"
#include "spsgd/problems.hpp"
#include "spsgd/util.hpp"
#include "spsgd/verify.hpp"

namespace spsgd {

struct ProblemConfig {
  std::string kind = "cosine_sum";
  int dim = 1;
  std::vector<double> diag;                 // quadratic: diagonal of A
  std::vector<std::vector<double>> matrix;  // quadratic: full A (else identity)
  int rows = 0;                             // logistic: number of data rows
  std::uint64_t data_seed = 1;              // logistic: data generation seed
};

struct HparamConfig {
  std::string mode = "unknown";  // known | unknown | explicit
  std::optional<double> eta, theta, tau;  // explicit mode inputs
};

/// Parsed experiment description.  Unknown JSON keys are rejected by name;
/// defaults are materialized so the canonical serialization (and therefore
/// the digest) does not depend on which optional keys were spelled out.
struct ExperimentConfig {
  ProblemConfig problem;
  std::string optimizer = "spsgd_norm";
  PrecondSpec precond;  // kind/beta/eps_reg/rows/cols/matrix/m_d/M_d/cap
  NoiseSpec noise;      // dim is filled from the problem at run time
  HparamConfig hyperparams;
  std::vector<std::int64_t> horizons{1024};
  int repetitions = 1;
  std::uint64_t seed = 42;
  std::optional<std::vector<double>> start_coords;  // explicit start point
  double start_fill = 1.0;                          // used when coords absent
  std::string output_dir = "out";

  /// Throws ParseError (with line/column) or SchemaError (with field path).
  static ExperimentConfig parse_text(const std::string& json_text);
  static ExperimentConfig load_file(const std::string& path);

  /// Canonical JSON serialization: sorted keys, defaults materialized.
  std::string canonical_json() const;

  /// Hash of the canonical serialization; names the output directory.
  std::string digest() const;

  Problem make_problem() const;
  Point make_start(const Problem& p) const;
  NoiseSpec make_noise_spec(const Problem& p) const;

  /// Resolves (eta, theta, tau) for one horizon according to `mode`; known
  /// mode consults the problem/noise constants and, for clipping variants,
  /// the preconditioner's spectral bounds.
  HyperParams hparams_for(const Problem& p, std::int64_t T) const;
};

/// One summary row per horizon.
struct ResultsRow {
  std::int64_t T = 0;
  std::string optimizer;
  double metric_mean = 0.0;    // mean over reps of (1/T) sum ||grad f(x_k)||
  double metric_stderr = 0.0;  // sample std / sqrt(reps)
  std::int64_t diverged = 0;   // diverged repetition count
};

/// Per-run bookkeeping kept alongside the summary.
struct RunSummary {
  std::int64_t T = 0;
  int rep = 0;
  std::string record_digest;
  bool diverged = false;
  std::int64_t zero_direction_events = 0;
  double metric = 0.0;
};

struct ResultsTable {
  std::vector<ResultsRow> rows;
  std::vector<RunSummary> runs;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string out_dir;  // realized output directory ("" when IO disabled)

  std::string summary_csv() const;   // exactly the ResultsRow columns
  std::string summary_json() const;
};

/// Serializes one run trace as CSV: commented header (seed, config digest,
/// optimizer, divergence marker, zero-direction count), then a column-name
/// row, then one row per iteration.  Doubles carry 17 significant digits.
std::string run_record_csv(const RunRecord& rec);

/// Runs repetitions x horizons with per-(T, rep) derived streams, merging
/// deterministically regardless of `jobs`.  With a non-empty `out_root`,
/// writes per-run CSVs plus summary.csv/summary.json under
/// out_root/<config digest>/.
ResultsTable run_experiment(const ExperimentConfig& cfg, int jobs,
                            const std::string& out_root);

/// CheckReports rendered as CSV (detail field quoted).
std::string checks_csv(const std::vector<CheckReport>& checks);

struct RatesReport {
  RateFit fit;
  double theoretical = 0.0;  // model decay exponent for the chosen mode
  double gap = 0.0;          // fit.exponent - theoretical
  ResultsTable table;
  std::string svg_path;  // empty when IO is disabled
  std::string report_json() const;
  std::string report_csv() const;
};

/// Requires at least four horizons and known/unknown hyperparameter mode.
RatesReport run_rates(const ExperimentConfig& cfg, int jobs,
                      const std::string& out_root);

struct VerifyOutcome {
  std::string which;
  std::vector<CheckReport> checks;
  bool all_pass = true;
  std::string report_json() const;
  std::string report_csv() const;
};

/// Canned check suites: "scalar" (pointwise inequality over a grid),
/// "burkholder" (Monte-Carlo matrix over noise families), "example1"
/// (two-point bias construction), "epsilon" (momentum-error ceiling on a
/// quadratic), or "all".
VerifyOutcome verify_suite(const std::string& which, std::uint64_t seed);

struct SeparationReport {
  double ctp_final_mean_grad = 0.0;   // clipped variant, last-window mean
  double norm_final_mean_grad = 0.0;  // normalized variant, last-window mean
  double fixed_point = 0.0;           // analytic stall point of the clipped run
  double tau = 0.0;
  std::vector<CheckReport> checks;
  bool all_pass = true;
  std::string report_json() const;
  std::string report_csv() const;
};

/// Canonical 1-D demonstration that step clipping can stall where step
/// normalization converges: scalar quadratic, two-point noise (sigma = 10),
/// sign-adversarial preconditioner (m_d = 1, M_d = 3), start 2, T = 10^4,
/// 20 repetitions.  Writes trajectories, a report and an SVG to out_dir
/// (unless empty).
SeparationReport separation_demo(const std::string& out_dir,
                                 std::uint64_t seed, int jobs);

}  // namespace spsgd
