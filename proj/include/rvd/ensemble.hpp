#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rvd/errors.hpp"
#include "rvd/vec.hpp"

namespace rvd {

// one weighted sample (x, p, w) of the phase-space density
struct PhaseParticle {
  Vec3 x;
  Vec3 p;
  double w = 0.0;
};

// Immutable ordered particle collection at a fixed time. support_radius R
// bounds both |x| and |p| for every particle. Units have c = 1 throughout.
class Ensemble {
 public:
  Ensemble() = default;

  // support_radius <= 0 means "compute from the data"
  Ensemble(std::vector<PhaseParticle> particles, double time = 0.0, double support_radius = 0.0)
      : particles_(std::move(particles)), time_(time), support_radius_(support_radius) {
    validate();
  }

  const std::vector<PhaseParticle>& particles() const { return particles_; }
  const PhaseParticle& operator[](std::size_t i) const { return particles_[i]; }
  std::size_t size() const { return particles_.size(); }
  bool empty() const { return particles_.empty(); }
  double time() const { return time_; }
  double support_radius() const { return support_radius_; }

  // compensated (Neumaier) sum of the weights
  double total_weight() const;

  // true when both ensembles carry the same labels: equal size and
  // bitwise-equal weights in the same order
  bool labels_match(const Ensemble& other) const;

  Vec6 phase_point(std::size_t i) const { return {particles_[i].x, particles_[i].p}; }

 private:
  void validate();

  std::vector<PhaseParticle> particles_;
  double time_ = 0.0;
  double support_radius_ = 0.0;
};

// compensated sum helper, used wherever mass exactness matters
class NeumaierSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace rvd
