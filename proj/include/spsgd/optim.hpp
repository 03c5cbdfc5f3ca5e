#pragma once

#include <cstdint>
#include <string>

#include "spsgd/precond.hpp"
#include "spsgd/problems.hpp"
#include "spsgd/record.hpp"

namespace spsgd {

enum class OptimizerKind {
  spsgd_norm,         // preconditioned momentum direction, normalized step
  clip_then_precond,  // clip the raw gradient, then precondition
  precond_then_clip,  // precondition, then clip the complete step
  sgd,                // identity D, no momentum, raw step
  msgd,               // identity D, momentum, raw step
  nsgd,               // spsgd_norm specialized to identity D
  clip_sgd,           // clip_then_precond specialized to identity D
};

const char* optimizer_name(OptimizerKind k);
OptimizerKind optimizer_from_name(const std::string& s);

/// spsgd_norm, msgd and nsgd average gradients; the clipping variants and
/// sgd run memoryless (theta forced to 0).
bool optimizer_uses_momentum(OptimizerKind k);
bool optimizer_uses_clipping(OptimizerKind k);
/// sgd/msgd/nsgd/clip_sgd ignore the configured preconditioner.
bool optimizer_forces_identity(OptimizerKind k);

/// Exponential moving average of gradients, seeded with the first gradient:
/// the first update sets m = g, later ones m = theta * m + (1 - theta) * g.
/// The weights on past gradients always form a convex combination.
struct MomentumState {
  Vec m;
  std::int64_t count = 0;
};
void momentum_update(MomentumState& s, double theta, const Vec& g);

/// Directions shorter than this are treated as zero: the iterate is left in
/// place and the skip is logged rather than dividing by a denormal norm.
inline constexpr double kZeroFloor = 1e-12;

/// Iterates beyond this norm (or any non-finite iterate) abort a run.
inline constexpr double kDivergenceBound = 1e12;

struct StepResult {
  Vec x;                // next iterate
  bool moved = true;    // false when the direction was below kZeroFloor
  bool clipped = false; // clipping factor was < 1
};

/// x - eta * D m / ||D m||; a unit-length preconditioned momentum step.
StepResult spsgd_norm_step(const Vec& x, const MomentumState& m,
                           const Preconditioner& D, double eta);

/// x - eta * D (min{1, tau/||g||} g): clip first, then precondition.
StepResult clip_then_precond_step(const Vec& x, const Vec& g,
                                  const Preconditioner& D, double eta,
                                  double tau);

/// x - eta * min{1, tau/||D g||} D g: precondition, then clip the full step.
StepResult precond_then_clip_step(const Vec& x, const Vec& g,
                                  const Preconditioner& D, double eta,
                                  double tau);

/// Step size and momentum given problem knowledge (delta = f(x_1) - f_star,
/// smoothness L, noise scale sigma and moment order p):
///   theta = 1 - min{1, max{(delta L / (sigma^2 T))^(p/(3p-2)), T^(-p/(2p-1))}}
///   eta   = sqrt((1 - theta) delta / (L T))
/// sigma = 0 degenerates to theta = 0 (the first term is taken as +inf).
HyperParams select_hparams_known(double delta, double L, double sigma,
                                 double p, std::int64_t T);

/// Parameter-free schedule: eta = T^(-3/4), theta = 1 - T^(-1/2).
HyperParams select_hparams_unknown(std::int64_t T);

/// Clipping threshold for clip-then-precondition given spectral bounds
/// m_d <= spec(D) <= M_d:
///   tau = max{2, 4 * 3^(1/p) * sigma * (M_d/m_d)^((p+1)/(2p)), 64 sigma M_d/m_d}.
double clip_threshold_ctp(double sigma, double p, double m_d, double M_d);

/// Threshold for precondition-then-clip:
///   tau = max{2, 4 * 3^(1/p) * sigma * M_d^(1+3/(2p)) / m_d^((p+1)/(2p)),
///             64 sigma M_d^(5/2) / m_d^(3/2)}.
double clip_threshold_ptc(double sigma, double p, double m_d, double M_d);

/// Companion step-size ceilings for the two clipping variants.
double clip_eta_max_ctp(double m_d, double L);                  // m_d / (24 L)
double clip_eta_max_ptc(double m_d, double M_d, double L);      // m_d / (24 L M_d^2)

struct RunOptions {
  double divergence_bound = kDivergenceBound;
  std::uint64_t seed = 0;            // recorded in the header
  std::string config_digest;         // recorded in the header
};

/// Executes one full optimization run and returns its trace.  Per iteration:
/// draw the stochastic gradient, apply clipping when the variant asks for it,
/// advance the preconditioner accumulators (clipped feed for
/// clip_then_precond, raw feed for precond_then_clip, configurable), then
/// step.  Completed runs have exactly hp.horizon rows; diverged runs stop
/// short and carry the abort iteration.
RunRecord run(const Problem& problem, OptimizerKind kind,
              const PrecondSpec& precond, const NoiseSpec& noise,
              const HyperParams& hp, const Point& start, RngStream& rng,
              const RunOptions& opts = {});

}  // namespace spsgd
