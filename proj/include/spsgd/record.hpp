#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spsgd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

bool all_finite(const Vec& v);

/// An iterate.  Use Point::of at API boundaries to enforce the invariants
/// (dimension >= 1, finite entries); internal update loops keep raw vectors
/// and run their own divergence guard instead of throwing.
struct Point {
  Vec x;

  int dim() const { return static_cast<int>(x.size()); }

  /// Validating factory; throws std::invalid_argument on an empty or
  /// non-finite vector.
  static Point of(Vec v);
};

/// Step size, momentum and optional clipping threshold for one run.
struct HyperParams {
  double eta = 0.0;                  // step size, > 0
  double theta = 0.0;                // momentum in [0, 1)
  std::optional<double> tau;         // clipping threshold, > 0 when present
  std::int64_t horizon = 0;          // iteration budget T >= 1

  /// Throws std::invalid_argument when any bound is violated.
  void validate() const;
};

/// Per-iteration trace of a single optimizer run plus identifying header.
struct RunRecord {
  struct Row {
    std::int64_t iter = 0;      // 1-based iteration index
    double f_value = 0.0;       // f(x_k)
    double true_grad_norm = 0.0;
    double step_norm = 0.0;     // ||x_{k+1} - x_k||
    double eps_norm = 0.0;      // ||gradient estimate - true gradient||
    double cond_number = 1.0;   // condition number of the applied preconditioner
    bool clipped = false;       // clipping active at this step
  };

  std::vector<Row> rows;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string optimizer_id;
  bool diverged = false;
  std::int64_t diverged_at = 0;        // iteration of abort; 0 if none
  std::int64_t zero_direction_events = 0;  // steps skipped on a ~zero direction
};

/// Content hash over the rows (header fields excluded), hex-encoded.
/// Equal row sequences hash equal; a record with no rows hashes to the
/// fixed empty-payload constant.
std::string record_digest(const RunRecord& rec);

}  // namespace spsgd
