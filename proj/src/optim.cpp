#include "spsgd/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace spsgd {
namespace {

void check_moment_order(double p, const char* what) {
  if (!(p > 1.0 && p <= 2.0))
    throw std::invalid_argument(std::string(what) + ": p must lie in (1, 2]");
}

void check_spectral(double m_d, double M_d, const char* what) {
  if (!(m_d > 0.0) || !(M_d >= m_d))
    throw std::invalid_argument(std::string(what) + ": need 0 < m_d <= M_d");
}

double clip_factor(double norm, double tau) {
  return (norm > tau) ? tau / norm : 1.0;
}

}  // namespace

const char* optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::spsgd_norm: return "spsgd_norm";
    case OptimizerKind::clip_then_precond: return "clip_then_precond";
    case OptimizerKind::precond_then_clip: return "precond_then_clip";
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::msgd: return "msgd";
    case OptimizerKind::nsgd: return "nsgd";
    case OptimizerKind::clip_sgd: return "clip_sgd";
  }
  return "?";
}

OptimizerKind optimizer_from_name(const std::string& s) {
  if (s == "spsgd_norm") return OptimizerKind::spsgd_norm;
  if (s == "clip_then_precond") return OptimizerKind::clip_then_precond;
  if (s == "precond_then_clip") return OptimizerKind::precond_then_clip;
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "msgd") return OptimizerKind::msgd;
  if (s == "nsgd") return OptimizerKind::nsgd;
  if (s == "clip_sgd") return OptimizerKind::clip_sgd;
  throw std::invalid_argument("unknown optimizer: " + s);
}

bool optimizer_uses_momentum(OptimizerKind k) {
  return k == OptimizerKind::spsgd_norm || k == OptimizerKind::msgd ||
         k == OptimizerKind::nsgd;
}

bool optimizer_uses_clipping(OptimizerKind k) {
  return k == OptimizerKind::clip_then_precond ||
         k == OptimizerKind::precond_then_clip || k == OptimizerKind::clip_sgd;
}

bool optimizer_forces_identity(OptimizerKind k) {
  return k == OptimizerKind::sgd || k == OptimizerKind::msgd ||
         k == OptimizerKind::nsgd || k == OptimizerKind::clip_sgd;
}

void momentum_update(MomentumState& s, double theta, const Vec& g) {
  if (!(theta >= 0.0 && theta < 1.0))
    throw std::invalid_argument("momentum_update: theta must lie in [0, 1)");
  if (s.count == 0) {
    s.m = g;  // seeding with the first gradient
  } else {
    if (s.m.size() != g.size())
      throw std::invalid_argument("momentum_update: dimension mismatch");
    s.m = theta * s.m + (1.0 - theta) * g;
  }
  ++s.count;
}

StepResult spsgd_norm_step(const Vec& x, const MomentumState& m,
                           const Preconditioner& D, double eta) {
  if (m.count == 0)
    throw std::invalid_argument("spsgd_norm_step: momentum not seeded");
  const Vec w = D.apply(m.m);
  const double n = w.norm();
  if (n <= kZeroFloor) return {x, /*moved=*/false, /*clipped=*/false};
  return {x - (eta / n) * w, true, false};
}

StepResult clip_then_precond_step(const Vec& x, const Vec& g,
                                  const Preconditioner& D, double eta,
                                  double tau) {
  if (!(tau > 0.0))
    throw std::invalid_argument("clip_then_precond_step: tau must be > 0");
  const double c = clip_factor(g.norm(), tau);
  return {x - eta * D.apply(c * g), true, c < 1.0};
}

StepResult precond_then_clip_step(const Vec& x, const Vec& g,
                                  const Preconditioner& D, double eta,
                                  double tau) {
  if (!(tau > 0.0))
    throw std::invalid_argument("precond_then_clip_step: tau must be > 0");
  const Vec w = D.apply(g);
  const double c = clip_factor(w.norm(), tau);
  return {x - (eta * c) * w, true, c < 1.0};
}

HyperParams select_hparams_known(double delta, double L, double sigma,
                                 double p, std::int64_t T) {
  if (!(delta > 0.0) || !(L > 0.0))
    throw std::invalid_argument("select_hparams_known: delta, L must be > 0");
  if (!(sigma >= 0.0))
    throw std::invalid_argument("select_hparams_known: sigma must be >= 0");
  check_moment_order(p, "select_hparams_known");
  if (T < 1) throw std::invalid_argument("select_hparams_known: T must be >= 1");
  const double Td = static_cast<double>(T);
  const double term1 =
      (sigma > 0.0)
          ? std::pow(delta * L / (sigma * sigma * Td), p / (3.0 * p - 2.0))
          : std::numeric_limits<double>::infinity();
  const double term2 = std::pow(Td, -p / (2.0 * p - 1.0));
  const double theta = 1.0 - std::min(1.0, std::max(term1, term2));
  HyperParams hp;
  hp.eta = std::sqrt((1.0 - theta) * delta / (L * Td));
  hp.theta = theta;
  hp.horizon = T;
  hp.validate();
  return hp;
}

HyperParams select_hparams_unknown(std::int64_t T) {
  if (T < 1)
    throw std::invalid_argument("select_hparams_unknown: T must be >= 1");
  const double Td = static_cast<double>(T);
  HyperParams hp;
  hp.eta = std::pow(Td, -0.75);
  hp.theta = 1.0 - std::pow(Td, -0.5);
  hp.horizon = T;
  hp.validate();
  return hp;
}

double clip_threshold_ctp(double sigma, double p, double m_d, double M_d) {
  if (!(sigma >= 0.0))
    throw std::invalid_argument("clip_threshold_ctp: sigma must be >= 0");
  check_moment_order(p, "clip_threshold_ctp");
  check_spectral(m_d, M_d, "clip_threshold_ctp");
  const double ratio = M_d / m_d;
  const double a = 4.0 * std::pow(3.0, 1.0 / p) * sigma *
                   std::pow(ratio, (p + 1.0) / (2.0 * p));
  const double b = 64.0 * sigma * ratio;
  return std::max({2.0, a, b});
}

double clip_threshold_ptc(double sigma, double p, double m_d, double M_d) {
  if (!(sigma >= 0.0))
    throw std::invalid_argument("clip_threshold_ptc: sigma must be >= 0");
  check_moment_order(p, "clip_threshold_ptc");
  check_spectral(m_d, M_d, "clip_threshold_ptc");
  const double a = 4.0 * std::pow(3.0, 1.0 / p) * sigma *
                   std::pow(M_d, 1.0 + 3.0 / (2.0 * p)) /
                   std::pow(m_d, (p + 1.0) / (2.0 * p));
  const double b = 64.0 * sigma * std::pow(M_d, 2.5) / std::pow(m_d, 1.5);
  return std::max({2.0, a, b});
}

double clip_eta_max_ctp(double m_d, double L) {
  check_spectral(m_d, m_d, "clip_eta_max_ctp");
  if (!(L > 0.0)) throw std::invalid_argument("clip_eta_max_ctp: L must be > 0");
  return m_d / (24.0 * L);
}

double clip_eta_max_ptc(double m_d, double M_d, double L) {
  check_spectral(m_d, M_d, "clip_eta_max_ptc");
  if (!(L > 0.0)) throw std::invalid_argument("clip_eta_max_ptc: L must be > 0");
  return m_d / (24.0 * L * M_d * M_d);
}

RunRecord run(const Problem& problem, OptimizerKind kind,
              const PrecondSpec& precond, const NoiseSpec& noise,
              const HyperParams& hp, const Point& start, RngStream& rng,
              const RunOptions& opts) {
  hp.validate();
  if (optimizer_uses_clipping(kind) && !hp.tau)
    throw std::invalid_argument("run: clipping optimizer requires tau");
  if (optimizer_uses_clipping(kind) && hp.theta != 0.0)
    throw std::invalid_argument("run: clipping optimizers run with theta = 0");
  if (start.dim() != problem.dim())
    throw std::invalid_argument("run: start dimension mismatch");

  NoiseSpec ns = noise;
  ns.dim = problem.dim();
  const NoiseSampler sampler(ns);

  PrecondSpec ps = optimizer_forces_identity(kind)
                       ? PrecondSpec{}  // identity
                       : precond;
  Preconditioner D(ps, problem.dim());

  RunRecord rec;
  rec.seed = opts.seed;
  rec.config_digest = opts.config_digest;
  rec.optimizer_id = optimizer_name(kind);
  rec.rows.reserve(static_cast<std::size_t>(hp.horizon));

  Vec x = start.x;
  MomentumState mom;

  for (std::int64_t k = 1; k <= hp.horizon; ++k) {
    if (!all_finite(x) || x.norm() > opts.divergence_bound) {
      rec.diverged = true;
      rec.diverged_at = k;
      break;
    }
    const Point xe{x};
    const double f = problem.value(xe);
    const Vec gtrue = problem.grad(xe);
    if (!std::isfinite(f) || !all_finite(gtrue)) {
      rec.diverged = true;
      rec.diverged_at = k;
      break;
    }

    const Vec gbar = gtrue + sampler.sample(rng);

    StepResult sr;
    Vec estimate;  // the gradient proxy whose error eps_norm reports
    switch (kind) {
      case OptimizerKind::spsgd_norm:
      case OptimizerKind::nsgd: {
        momentum_update(mom, hp.theta, gbar);
        D.update(gbar);
        sr = spsgd_norm_step(x, mom, D, hp.eta);
        estimate = mom.m;
        break;
      }
      case OptimizerKind::msgd: {
        momentum_update(mom, hp.theta, gbar);
        sr = StepResult{x - hp.eta * mom.m, true, false};
        estimate = mom.m;
        break;
      }
      case OptimizerKind::sgd: {
        sr = StepResult{x - hp.eta * gbar, true, false};
        estimate = gbar;
        break;
      }
      case OptimizerKind::clip_then_precond:
      case OptimizerKind::clip_sgd: {
        const double n = gbar.norm();
        const double c = (n > *hp.tau) ? *hp.tau / n : 1.0;
        const Vec gclip = c * gbar;
        D.update(ps.update_feed == UpdateFeed::raw ? gbar : gclip);
        sr = clip_then_precond_step(x, gbar, D, hp.eta, *hp.tau);
        estimate = gclip;
        break;
      }
      case OptimizerKind::precond_then_clip: {
        if (ps.update_feed == UpdateFeed::clipped) {
          // Clip against the pre-update operator to break the circular
          // dependency between the feed and the freshly updated state.
          const Vec w0 = D.apply(gbar);
          const double c0 = (w0.norm() > *hp.tau) ? *hp.tau / w0.norm() : 1.0;
          D.update(c0 * gbar);
        } else {
          D.update(gbar);
        }
        sr = precond_then_clip_step(x, gbar, D, hp.eta, *hp.tau);
        estimate = gbar;
        break;
      }
    }

    if (!sr.moved) ++rec.zero_direction_events;

    RunRecord::Row row;
    row.iter = k;
    row.f_value = f;
    row.true_grad_norm = gtrue.norm();
    row.step_norm = (sr.x - x).norm();
    row.eps_norm = (estimate - gtrue).norm();
    row.cond_number = D.condition_number();
    row.clipped = sr.clipped;
    rec.rows.push_back(row);

    x = sr.x;
  }
  return rec;
}

}  // namespace spsgd
