#include "spsgd/precond.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace spsgd {
namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_spd(const Mat& A, int dim, const char* what) {
  if (A.rows() != dim || A.cols() != dim)
    throw std::invalid_argument(std::string(what) + ": matrix shape mismatch");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument(std::string(what) + ": matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw std::invalid_argument(std::string(what) +
                                ": matrix must be positive definite");
}

}  // namespace

const char* precond_kind_name(PrecondKind k) {
  switch (k) {
    case PrecondKind::identity: return "identity";
    case PrecondKind::adagrad_diag: return "adagrad_diag";
    case PrecondKind::rmsprop_diag: return "rmsprop_diag";
    case PrecondKind::shampoo_kron: return "shampoo_kron";
    case PrecondKind::dense_spd: return "dense_spd";
    case PrecondKind::adversarial_sign: return "adversarial_sign";
  }
  return "?";
}

PrecondKind precond_kind_from_name(const std::string& s) {
  if (s == "identity") return PrecondKind::identity;
  if (s == "adagrad_diag") return PrecondKind::adagrad_diag;
  if (s == "rmsprop_diag") return PrecondKind::rmsprop_diag;
  if (s == "shampoo_kron") return PrecondKind::shampoo_kron;
  if (s == "dense_spd") return PrecondKind::dense_spd;
  if (s == "adversarial_sign") return PrecondKind::adversarial_sign;
  throw std::invalid_argument("unknown preconditioner kind: " + s);
}

void PrecondSpec::validate(int dim) const {
  if (dim < 1) throw std::invalid_argument("PrecondSpec: dim must be >= 1");
  if (!(eps_reg > 0.0))
    throw std::invalid_argument("PrecondSpec: eps_reg must be > 0");
  if (kappa_cap && !(*kappa_cap >= 1.0))
    throw std::invalid_argument("PrecondSpec: kappa_cap must be >= 1");
  switch (kind) {
    case PrecondKind::identity:
      break;
    case PrecondKind::adagrad_diag:
      break;
    case PrecondKind::rmsprop_diag:
      if (!(beta >= 0.0 && beta < 1.0))
        throw std::invalid_argument("PrecondSpec: beta must lie in [0, 1)");
      break;
    case PrecondKind::shampoo_kron:
      if (!(beta >= 0.0 && beta < 1.0))
        throw std::invalid_argument("PrecondSpec: beta must lie in [0, 1)");
      if (rows < 1 || cols < 1 || rows * cols != dim)
        throw std::invalid_argument(
            "PrecondSpec: shampoo_kron needs rows * cols == dim");
      break;
    case PrecondKind::dense_spd:
      check_spd(matrix, dim, "PrecondSpec: dense_spd");
      break;
    case PrecondKind::adversarial_sign:
      if (dim != 1)
        throw std::invalid_argument(
            "PrecondSpec: adversarial_sign requires dim == 1");
      if (!(m_d > 0.0) || !(M_d >= m_d))
        throw std::invalid_argument(
            "PrecondSpec: adversarial_sign needs 0 < m_d <= M_d");
      break;
  }
  if (bound_m_d || bound_M_d) {
    if (!bound_m_d || !bound_M_d || !(*bound_m_d > 0.0) ||
        !(*bound_M_d >= *bound_m_d))
      throw std::invalid_argument(
          "PrecondSpec: spectral bounds need 0 < bound_m_d <= bound_M_d");
  }
}

Preconditioner::Preconditioner(const PrecondSpec& spec, int dim)
    : spec_(spec), dim_(dim) {
  spec_.validate(dim);
  switch (spec_.kind) {
    case PrecondKind::adagrad_diag:
    case PrecondKind::rmsprop_diag:
      diag_acc_ = Vec::Zero(dim);
      break;
    case PrecondKind::shampoo_kron:
      left_acc_ = Mat::Zero(spec_.rows, spec_.rows);
      right_acc_ = Mat::Zero(spec_.cols, spec_.cols);
      break;
    case PrecondKind::dense_spd: {
      Eigen::SelfAdjointEigenSolver<Mat> es(spec_.matrix);
      dense_q_ = es.eigenvectors();
      dense_ev_ = es.eigenvalues();
      break;
    }
    default:
      break;
  }
}

void Preconditioner::update(const Vec& g) {
  if (g.size() != dim_)
    throw std::invalid_argument("Preconditioner::update: dimension mismatch");
  switch (spec_.kind) {
    case PrecondKind::adagrad_diag:
      diag_acc_ += g.cwiseProduct(g);
      break;
    case PrecondKind::rmsprop_diag:
      diag_acc_ = spec_.beta * diag_acc_ + (1.0 - spec_.beta) * g.cwiseProduct(g);
      break;
    case PrecondKind::shampoo_kron: {
      Eigen::Map<const RowMat> G(g.data(), spec_.rows, spec_.cols);
      left_acc_ = spec_.beta * left_acc_ + (1.0 - spec_.beta) * (G * G.transpose());
      right_acc_ = spec_.beta * right_acc_ + (1.0 - spec_.beta) * (G.transpose() * G);
      shampoo_dirty_ = true;
      break;
    }
    case PrecondKind::adversarial_sign:
      last_sign_ = (g[0] >= 0.0) ? 1.0 : -1.0;
      break;
    default:
      break;  // identity, dense_spd: stateless
  }
}

double Preconditioner::adversarial_scalar() const {
  return last_sign_ > 0.0 ? spec_.m_d : spec_.M_d;
}

void Preconditioner::install_kron_factors(Mat left, Mat right) {
  if (spec_.kind != PrecondKind::shampoo_kron)
    throw std::logic_error("install_kron_factors: shampoo_kron only");
  if (left.rows() != spec_.rows || left.cols() != spec_.rows ||
      right.rows() != spec_.cols || right.cols() != spec_.cols)
    throw std::invalid_argument("install_kron_factors: factor shape mismatch");
  left_acc_ = std::move(left);
  right_acc_ = std::move(right);
  shampoo_dirty_ = true;
}

Vec Preconditioner::effective_diag() const {
  Vec d;
  switch (spec_.kind) {
    case PrecondKind::identity:
      return Vec::Ones(dim_);
    case PrecondKind::adversarial_sign:
      return Vec::Constant(1, adversarial_scalar());
    case PrecondKind::adagrad_diag:
    case PrecondKind::rmsprop_diag:
      d = (diag_acc_.array() + spec_.eps_reg).rsqrt().matrix();
      break;
    default:
      throw std::logic_error("effective_diag: not a diagonal preconditioner");
  }
  if (spec_.kappa_cap) {
    // Raise the small end so max/min <= kappa; the largest entry is kept.
    const double floor = d.maxCoeff() / *spec_.kappa_cap;
    d = d.cwiseMax(floor);
  }
  return d;
}

void Preconditioner::refresh_shampoo() const {
  if (!shampoo_dirty_) return;
  // Per-factor quarter inverse root with spectral floor; under a condition
  // cap each factor is individually clamped at sqrt(kappa) so the Kronecker
  // product meets the overall bound.
  const double factor_cap =
      spec_.kappa_cap ? std::sqrt(*spec_.kappa_cap) : 0.0;
  double cond = 1.0;
  auto build = [&](const Mat& acc) {
    Eigen::SelfAdjointEigenSolver<Mat> es(acc);
    Vec a = es.eigenvalues()
                .cwiseMax(spec_.eps_reg)
                .array()
                .pow(-0.25)
                .matrix();
    if (spec_.kappa_cap) a = a.cwiseMax(a.maxCoeff() / factor_cap);
    cond *= a.maxCoeff() / a.minCoeff();
    return Mat(es.eigenvectors() * a.asDiagonal() *
               es.eigenvectors().transpose());
  };
  shampoo_left_ = build(left_acc_);
  shampoo_right_ = build(right_acc_);
  shampoo_cond_ = cond;
  shampoo_dirty_ = false;
}

Vec Preconditioner::apply(const Vec& v) const {
  if (v.size() != dim_)
    throw std::invalid_argument("Preconditioner::apply: dimension mismatch");
  switch (spec_.kind) {
    case PrecondKind::identity:
      return v;
    case PrecondKind::adagrad_diag:
    case PrecondKind::rmsprop_diag:
      return effective_diag().cwiseProduct(v);
    case PrecondKind::adversarial_sign:
      return adversarial_scalar() * v;
    case PrecondKind::dense_spd: {
      if (!spec_.kappa_cap) return spec_.matrix * v;
      const double floor = dense_ev_.maxCoeff() / *spec_.kappa_cap;
      return dense_q_ * dense_ev_.cwiseMax(floor).asDiagonal() *
             (dense_q_.transpose() * v);
    }
    case PrecondKind::shampoo_kron: {
      refresh_shampoo();
      Eigen::Map<const RowMat> V(v.data(), spec_.rows, spec_.cols);
      RowMat out = shampoo_left_ * V * shampoo_right_;
      return Eigen::Map<Vec>(out.data(), dim_);
    }
  }
  return v;
}

double Preconditioner::condition_number() const {
  switch (spec_.kind) {
    case PrecondKind::identity:
    case PrecondKind::adversarial_sign:
      return 1.0;  // scalar multiples of the identity
    case PrecondKind::adagrad_diag:
    case PrecondKind::rmsprop_diag: {
      const Vec d = effective_diag();
      return d.maxCoeff() / d.minCoeff();
    }
    case PrecondKind::dense_spd: {
      if (!spec_.kappa_cap) return dense_ev_.maxCoeff() / dense_ev_.minCoeff();
      const double floor = dense_ev_.maxCoeff() / *spec_.kappa_cap;
      const Vec ev = dense_ev_.cwiseMax(floor);
      return ev.maxCoeff() / ev.minCoeff();
    }
    case PrecondKind::shampoo_kron:
      refresh_shampoo();
      return shampoo_cond_;
  }
  return 1.0;
}

Preconditioner Preconditioner::capped(double kappa) const {
  if (!(kappa >= 1.0))
    throw std::invalid_argument("Preconditioner::capped: kappa must be >= 1");
  Preconditioner out = *this;
  // Keep the tighter of an existing cap and the new one (idempotent for the
  // same kappa, monotone otherwise).
  out.spec_.kappa_cap =
      spec_.kappa_cap ? std::min(*spec_.kappa_cap, kappa) : kappa;
  out.shampoo_dirty_ = true;
  return out;
}

}  // namespace spsgd
