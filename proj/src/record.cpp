#include "spsgd/record.hpp"

#include <cmath>
#include <stdexcept>

#include "spsgd/util.hpp"

namespace spsgd {

bool all_finite(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

Point Point::of(Vec v) {
  if (v.size() < 1)
    throw std::invalid_argument("Point: dimension must be >= 1");
  if (!all_finite(v))
    throw std::invalid_argument("Point: entries must be finite");
  return Point{std::move(v)};
}

void HyperParams::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("HyperParams: eta must be positive and finite");
  if (!(theta >= 0.0 && theta < 1.0))
    throw std::invalid_argument("HyperParams: theta must lie in [0, 1)");
  if (tau && (!(*tau > 0.0) || !std::isfinite(*tau)))
    throw std::invalid_argument("HyperParams: tau must be positive and finite");
  if (horizon < 1)
    throw std::invalid_argument("HyperParams: horizon must be >= 1");
}

std::string record_digest(const RunRecord& rec) {
  Fnv1a64 h;
  for (const auto& r : rec.rows) {
    h.absorb_u64(static_cast<std::uint64_t>(r.iter));
    h.absorb_double(r.f_value);
    h.absorb_double(r.true_grad_norm);
    h.absorb_double(r.step_norm);
    h.absorb_double(r.eps_norm);
    h.absorb_double(r.cond_number);
    h.absorb_u64(r.clipped ? 1 : 0);
  }
  return h.hex();
}

}  // namespace spsgd
