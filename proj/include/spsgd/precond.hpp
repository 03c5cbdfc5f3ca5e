#pragma once

#include <optional>
#include <string>

#include "spsgd/record.hpp"

namespace spsgd {

enum class PrecondKind {
  identity,
  adagrad_diag,      // D = diag(1/sqrt(sum g^2 + eps))
  rmsprop_diag,      // D = diag(1/sqrt(ema g^2 + eps))
  shampoo_kron,      // D = (L (x) R)^(-1/4) over a rows x cols gradient
  dense_spd,         // fixed user-supplied SPD matrix
  adversarial_sign,  // 1-D: m_d when the last gradient was >= 0, else M_d
};

const char* precond_kind_name(PrecondKind k);
PrecondKind precond_kind_from_name(const std::string& s);

/// Which gradient the accumulator update consumes in clipping runs.
enum class UpdateFeed { kind_default, raw, clipped };

/// Static description of a preconditioner.
struct PrecondSpec {
  PrecondKind kind = PrecondKind::identity;
  double beta = 0.99;     // EMA decay (rmsprop_diag, shampoo_kron), in [0, 1)
  double eps_reg = 1e-8;  // spectral floor, > 0
  int rows = 0, cols = 0; // shampoo gradient shape; rows * cols == dim
  Mat matrix;             // dense_spd operator
  double m_d = 1.0;       // adversarial small scalar, > 0
  double M_d = 1.0;       // adversarial large scalar, >= m_d
  std::optional<double> kappa_cap;  // condition-number cap, >= 1
  UpdateFeed update_feed = UpdateFeed::kind_default;

  /// User-asserted spectral bounds (used by threshold selectors when the
  /// preconditioner cannot derive them itself).
  std::optional<double> bound_m_d, bound_M_d;

  void validate(int dim) const;
};

/// Per-run mutable preconditioner state.  Positive definite from the moment
/// of construction (before any gradient arrives).  Single-owner: one run
/// mutates one instance; no internal locking.
class Preconditioner {
 public:
  Preconditioner(const PrecondSpec& spec, int dim);

  /// Folds a gradient into the accumulators (no-op for identity/dense_spd).
  void update(const Vec& g);

  /// D v for the current state, spectral floor and condition cap applied.
  Vec apply(const Vec& v) const;

  /// Condition number (max/min singular value) of the applied operator.
  double condition_number() const;

  /// Copy of this state whose applied operator is clamped so its condition
  /// number is at most kappa: eigendirections below max/kappa are raised to
  /// max/kappa, the largest is left unchanged.  Idempotent.
  Preconditioner capped(double kappa) const;

  PrecondKind kind() const { return spec_.kind; }
  int dim() const { return dim_; }
  const PrecondSpec& spec() const { return spec_; }

  /// Effective diagonal of the applied operator; valid for identity,
  /// adagrad_diag, rmsprop_diag and adversarial_sign.
  Vec effective_diag() const;

  // Accumulator inspection (tests).
  const Vec& diag_accumulator() const { return diag_acc_; }
  const Mat& left_accumulator() const { return left_acc_; }
  const Mat& right_accumulator() const { return right_acc_; }
  double adversarial_scalar() const;

  /// Installs raw Kronecker factor accumulators directly (oracle tests need
  /// arbitrary SPD pairs, which rank-one updates cannot reach).  shampoo only.
  void install_kron_factors(Mat left, Mat right);

 private:
  PrecondSpec spec_;
  int dim_ = 0;
  Vec diag_acc_;             // adagrad/rmsprop accumulator
  Mat left_acc_, right_acc_; // shampoo factor accumulators
  double last_sign_ = 1.0;   // adversarial state
  // Cached dense_spd eigendecomposition (fixed at construction).
  Mat dense_q_;
  Vec dense_ev_;

  // Lazily cached shampoo factor transforms; rebuilt after update().
  mutable bool shampoo_dirty_ = true;
  mutable Mat shampoo_left_, shampoo_right_;
  mutable double shampoo_cond_ = 1.0;
  void refresh_shampoo() const;
};

}  // namespace spsgd
