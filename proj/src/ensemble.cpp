#include "rvd/ensemble.hpp"

#include <algorithm>
#include <cmath>

namespace rvd {

void Ensemble::validate() {
  double max_norm = 0.0;
  for (const PhaseParticle& q : particles_) {
    if (!(q.w > 0.0) || !std::isfinite(q.w)) throw invalid_spec("particle weights must be finite and positive");
    if (!std::isfinite(norm2(q.x)) || !std::isfinite(norm2(q.p)))
      throw invalid_spec("particle coordinates must be finite");
    max_norm = std::max({max_norm, norm(q.x), norm(q.p)});
  }
  if (support_radius_ <= 0.0) {
    support_radius_ = max_norm;
  } else if (max_norm > support_radius_ * (1.0 + 1e-12)) {
    throw invalid_spec("particle outside the declared support radius");
  }
}

double Ensemble::total_weight() const {
  NeumaierSum s;
  for (const PhaseParticle& q : particles_) s.add(q.w);
  return s.value();
}

bool Ensemble::labels_match(const Ensemble& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i)
    if (particles_[i].w != other.particles_[i].w) return false;
  return true;
}

}  // namespace rvd
